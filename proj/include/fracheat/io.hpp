#pragma once

// JSON configuration, CSV output with JSON sidecars, and the on-disk profile cache.

#include <cstdint>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracheat/asymptotics.hpp"
#include "fracheat/core.hpp"
#include "fracheat/errors.hpp"
#include "fracheat/fields.hpp"
#include "fracheat/kernel.hpp"

#ifndef FRACHEAT_VERSION
#define FRACHEAT_VERSION "0.0.0-dev"
#endif

namespace fracheat {

using json = nlohmann::json;

inline std::string version() { return FRACHEAT_VERSION; }

// ---- scalar helpers ----

// p, radii and caps may be infinite; JSON carries those as the string "inf".
inline json extended_to_json(double v) {
    if (v == kInf) return "inf";
    return v;
}

inline double extended_from_json(const json& j, const std::string& what) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kInf;
        throw DomainError(what + ": expected a number or \"inf\"");
    }
    if (!j.is_number()) throw DomainError(what + ": expected a number or \"inf\"");
    return j.get<double>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline double need_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) throw DomainError(where + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

// ---- params, datum, grid ----

inline json to_json(const ModelParams& p) { return {{"alpha", p.alpha}, {"s", p.s}, {"N", p.N}}; }

inline ModelParams params_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("params: expected an object");
    ModelParams p;
    p.alpha = need_number(j, "alpha", "params");
    p.s = need_number(j, "s", "params");
    if (!j.contains("N") || !j.at("N").is_number_integer()) throw DomainError("params: missing integer field 'N'");
    p.N = j.at("N").get<int>();
    p.validate();
    return p;
}

inline json to_json(const InitialDatum& d) {
    json j;
    j["family"] = to_string(d.family());
    switch (d.family()) {
        case DatumFamily::gaussian: j["width"] = d.scale(); j["amplitude"] = d.amplitude(); break;
        case DatumFamily::bump:
        case DatumFamily::indicator: j["radius"] = d.scale(); j["amplitude"] = d.amplitude(); break;
        case DatumFamily::power_tail: j["beta"] = d.beta(); j["A"] = d.amplitude(); break;
        case DatumFamily::table: j["r"] = d.table_radii(); j["u"] = d.table_values(); break;
    }
    return j;
}

inline InitialDatum datum_from_json(const json& j, int N) {
    if (!j.is_object() || !j.contains("family")) throw DomainError("datum: expected an object with a 'family'");
    const auto f = j.at("family").get<std::string>();
    if (f == "gaussian") return InitialDatum::gaussian(N, need_number(j, "width", "datum"), get_or(j, "amplitude", 1.0));
    if (f == "bump") {
        if (j.contains("mass")) return InitialDatum::bump_with_mass(N, need_number(j, "radius", "datum"), need_number(j, "mass", "datum"));
        return InitialDatum::bump(N, need_number(j, "radius", "datum"), get_or(j, "amplitude", 1.0));
    }
    if (f == "power_tail") return InitialDatum::power_tail(N, need_number(j, "beta", "datum"), get_or(j, "A", 1.0));
    if (f == "indicator") return InitialDatum::indicator(N, need_number(j, "radius", "datum"), get_or(j, "amplitude", 1.0));
    if (f == "table") {
        if (!j.contains("r") || !j.contains("u")) throw DomainError("datum: table needs 'r' and 'u' arrays");
        return InitialDatum::table(N, j.at("r").get<std::vector<double>>(), j.at("u").get<std::vector<double>>());
    }
    throw DomainError("datum: unknown family '" + f + "'");
}

struct GridSpec {
    Spacing spacing = Spacing::logarithmic;
    double r0 = 1e-4;
    double r1 = 1e3;
    std::size_t n = 600;

    RadialGrid build(int N) const {
        return spacing == Spacing::uniform ? RadialGrid::uniform(N, r0, r1, n) : RadialGrid::logarithmic(N, r0, r1, n);
    }
    bool operator==(const GridSpec&) const = default;
};

inline json to_json(const GridSpec& g) {
    return {{"spacing", g.spacing == Spacing::uniform ? "uniform" : "logarithmic"}, {"r0", g.r0}, {"r1", g.r1}, {"n", g.n}};
}

inline GridSpec grid_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("grid: expected an object");
    GridSpec g;
    const auto sp = get_or<std::string>(j, "spacing", "logarithmic");
    if (sp == "uniform") g.spacing = Spacing::uniform;
    else if (sp == "logarithmic") g.spacing = Spacing::logarithmic;
    else throw DomainError("grid: spacing must be 'uniform' or 'logarithmic'");
    g.r0 = need_number(j, "r0", "grid");
    g.r1 = need_number(j, "r1", "grid");
    g.n = std::size_t(need_number(j, "n", "grid"));
    return g;
}

// ---- scenarios ----

inline json to_json(const PowerLog& g) { return {{"c", g.c}, {"a", g.a}, {"b", g.b}}; }

inline PowerLog powerlog_from_json(const json& j) {
    return {get_or(j, "c", 1.0), need_number(j, "a", "scale function"), get_or(j, "b", 0.0)};
}

inline json to_json(const ScaleWindow& w) {
    json j{{"kind", to_string(w.kind)}};
    switch (w.kind) {
        case WindowKind::compact: j["mu"] = w.mu; break;
        case WindowKind::characteristic: j["nu"] = w.nu; j["mu"] = w.mu; break;
        case WindowKind::exterior: j["nu"] = w.nu; break;
        case WindowKind::fast_matched: j["nu"] = w.nu; j["cap"] = extended_to_json(w.cap); break;
        case WindowKind::intermediate: j["nu"] = w.nu; j["mu"] = w.mu; j["g"] = to_json(w.scale); break;
        case WindowKind::far_tail: j["h"] = to_json(w.scale); break;
        case WindowKind::whole_space: break;
    }
    return j;
}

inline ScaleWindow window_from_json(const json& j, const ModelParams& p, const InitialDatum& d) {
    if (!j.is_object() || !j.contains("kind")) throw DomainError("window: expected an object with a 'kind'");
    const auto k = j.at("kind").get<std::string>();
    if (k == "compact") return ScaleWindow::compact(need_number(j, "mu", "window"));
    if (k == "characteristic") return ScaleWindow::characteristic(need_number(j, "nu", "window"), need_number(j, "mu", "window"));
    if (k == "exterior") return ScaleWindow::exterior(need_number(j, "nu", "window"));
    if (k == "fast_matched")
        return ScaleWindow::fast_matched(need_number(j, "nu", "window"), j.contains("cap") ? extended_from_json(j.at("cap"), "window cap") : kInf);
    if (k == "intermediate")
        return ScaleWindow::intermediate(powerlog_from_json(j.at("g")), need_number(j, "nu", "window"), need_number(j, "mu", "window"), p);
    if (k == "far_tail") return ScaleWindow::far_tail(powerlog_from_json(j.at("h")), p, d.beta());
    if (k == "whole_space") return ScaleWindow::whole_space();
    throw DomainError("window: unknown kind '" + k + "'");
}

inline json to_json(const NormSpec& n) {
    return {{"p", extended_to_json(n.p)}, {"kind", n.kind == NormKind::strong ? "strong" : "weak"}};
}

inline NormSpec norm_from_json(const json& j) {
    if (!j.is_object() || !j.contains("p")) throw DomainError("norm: expected an object with 'p'");
    NormSpec n;
    n.p = extended_from_json(j.at("p"), "norm p");
    const auto k = get_or<std::string>(j, "kind", "strong");
    if (k == "strong") n.kind = NormKind::strong;
    else if (k == "weak") n.kind = NormKind::weak;
    else throw DomainError("norm: kind must be 'strong' or 'weak'");
    n.validate();
    return n;
}

inline json to_json(const Thresholds& t) {
    json j{{"trend", t.trend}, {"trend_factor", t.trend_factor}, {"wiggle", t.wiggle}};
    if (t.terminal_tol) j["terminal_tol"] = *t.terminal_tol;
    if (t.slope_tol) j["slope_tol"] = *t.slope_tol;
    return j;
}

inline Thresholds thresholds_from_json(const json& j) {
    Thresholds t;
    t.trend = get_or(j, "trend", true);
    t.trend_factor = get_or(j, "trend_factor", 0.25);
    t.wiggle = get_or(j, "wiggle", 0.05);
    if (j.contains("terminal_tol")) t.terminal_tol = j.at("terminal_tol").get<double>();
    if (j.contains("slope_tol")) t.slope_tol = j.at("slope_tol").get<double>();
    return t;
}

inline std::vector<double> times_from_json(const json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object() && j.contains("dyadic")) {
        const auto& d = j.at("dyadic");
        return dyadic_times(d.at("K").get<int>(), get_or(d, "t0", 1.0));
    }
    throw DomainError("times: expected an array or {\"dyadic\": {\"K\": .., \"t0\": ..}}");
}

inline json to_json(const ScenarioSpec& s) {
    json j{{"id", to_string(s.id)},
           {"params", to_json(s.params)},
           {"datum", to_json(s.datum)},
           {"window", to_json(s.window)},
           {"norm", to_json(s.norm)},
           {"times", s.times},
           {"thresholds", to_json(s.thresholds)},
           {"cap", extended_to_json(s.cap)},
           {"synthetic_reference", s.synthetic_reference},
           {"nodes", s.nodes}};
    if (s.slow_cap) j["slow_cap"] = to_json(*s.slow_cap);
    return j;
}

// Missing params or datum fall back to the enclosing config's.
inline ScenarioSpec scenario_from_json(const json& j, const std::optional<ModelParams>& params,
                                       const std::optional<json>& datum) {
    if (!j.is_object() || !j.contains("id")) throw DomainError("scenario: expected an object with an 'id'");
    const auto id = parse_scenario_id(j.at("id").get<std::string>());
    const ModelParams p = j.contains("params") ? params_from_json(j.at("params"))
                          : params ? *params
                                   : throw DomainError("scenario " + to_string(id) + ": no params");
    const json dj = j.contains("datum") ? j.at("datum") : datum ? *datum : throw DomainError("scenario " + to_string(id) + ": no datum");
    const auto d = datum_from_json(dj, p.N);
    if (!j.contains("window")) throw DomainError("scenario " + to_string(id) + ": no window");
    if (!j.contains("norm")) throw DomainError("scenario " + to_string(id) + ": no norm");
    if (!j.contains("times")) throw DomainError("scenario " + to_string(id) + ": no times");
    ScenarioSpec s(id, p, d, window_from_json(j.at("window"), p, d), norm_from_json(j.at("norm")), times_from_json(j.at("times")));
    if (j.contains("thresholds")) s.thresholds = thresholds_from_json(j.at("thresholds"));
    if (j.contains("cap")) s.cap = extended_from_json(j.at("cap"), "scenario cap");
    if (j.contains("slow_cap")) s.slow_cap = powerlog_from_json(j.at("slow_cap"));
    s.synthetic_reference = get_or(j, "synthetic_reference", false);
    s.nodes = get_or<std::size_t>(j, "nodes", 0);
    return s;
}

// ---- run configuration ----

struct RunConfig {
    std::optional<ModelParams> params;
    std::optional<json> datum;  // kept as JSON so that it can be bound to each scenario's N
    GridSpec profile_grid;
    std::optional<GridSpec> field_grid;
    std::vector<double> times;
    std::vector<std::string> routes{"fourier", "convolution"};
    ProfileMethod method = ProfileMethod::direct;
    std::vector<ScenarioSpec> scenarios;
    std::vector<double> points;  // evaluation radii for potentials
    std::string out = "out";
    std::uint64_t seed = 0;
    int verbosity = 1;
    std::optional<std::string> description;
    std::optional<json> acceptance;  // criterion-specific settings read by the acceptance runner
};

inline ProfileMethod parse_method(const std::string& m) {
    if (m == "direct" || m == "direct-inversion") return ProfileMethod::direct;
    if (m == "subordination") return ProfileMethod::subordination;
    throw DomainError("method must be 'direct' or 'subordination'");
}

inline json to_json(const RunConfig& c) {
    json j;
    if (c.params) j["params"] = to_json(*c.params);
    if (c.datum) j["datum"] = *c.datum;
    j["grid"] = to_json(c.profile_grid);
    if (c.field_grid) j["field_grid"] = to_json(*c.field_grid);
    j["times"] = c.times;
    j["routes"] = c.routes;
    j["method"] = c.method == ProfileMethod::direct ? "direct" : "subordination";
    j["scenarios"] = json::array();
    for (const auto& s : c.scenarios) j["scenarios"].push_back(to_json(s));
    j["points"] = c.points;
    j["out"] = c.out;
    j["seed"] = c.seed;
    j["verbosity"] = c.verbosity;
    if (c.description) j["description"] = *c.description;
    if (c.acceptance) j["acceptance"] = *c.acceptance;
    return j;
}

inline RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("config: expected a JSON object");
    static const std::vector<std::string> known{"params", "datum", "grid", "field_grid", "times", "routes", "method",
                                                "scenarios", "points", "out", "seed", "verbosity", "description", "acceptance"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw DomainError("config: unknown key '" + it.key() + "'");
    RunConfig c;
    if (j.contains("params")) c.params = params_from_json(j.at("params"));
    if (j.contains("datum")) {
        c.datum = j.at("datum");
        // normalize through the typed datum so that serialization is canonical
        if (c.params) c.datum = to_json(datum_from_json(*c.datum, c.params->N));
    }
    if (j.contains("grid")) c.profile_grid = grid_from_json(j.at("grid"));
    if (j.contains("field_grid")) c.field_grid = grid_from_json(j.at("field_grid"));
    if (j.contains("times")) c.times = times_from_json(j.at("times"));
    if (j.contains("routes")) {
        c.routes = j.at("routes").get<std::vector<std::string>>();
        for (const auto& r : c.routes)
            if (r != "fourier" && r != "convolution") throw DomainError("routes: 'fourier' or 'convolution'");
    }
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("scenarios")) {
        for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from_json(s, c.params, c.datum));
    }
    if (j.contains("points")) c.points = j.at("points").get<std::vector<double>>();
    c.out = get_or<std::string>(j, "out", "out");
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.verbosity = get_or(j, "verbosity", 1);
    if (j.contains("description")) c.description = j.at("description").get<std::string>();
    if (j.contains("acceptance")) c.acceptance = j.at("acceptance");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DomainError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

// FNV-1a over the canonical (key-sorted, compact) serialization.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ---- CSV and sidecars ----

inline std::string format_number(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) throw DomainError("cannot write " + path.string());
        out_.imbue(std::locale::classic());
        row_strings(header);
    }
    void row(const std::vector<double>& v) {
        std::vector<std::string> s;
        for (double x : v) s.push_back(format_number(x));
        row_strings(s);
    }
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline json sidecar_base(const std::string& hash) { return {{"version", version()}, {"config_hash", hash}}; }

inline json to_json(const ProfileTable& t) {
    json j;
    j["params"] = to_json(t.params);
    j["method"] = to_string(t.method);
    j["law"] = to_string(t.law);
    j["kappa"] = t.kappa ? json(*t.kappa) : json(nullptr);
    j["kappa_spread"] = t.kappa_spread;
    j["kappa_hat"] = t.kappa_hat;
    j["value_at_origin"] = t.value_at_origin ? json(*t.value_at_origin) : json(nullptr);
    j["tail_variation"] = t.tail_variation;
    j["mass_check"] = {{"mass", t.diag.mass}, {"error", t.diag.mass_error}, {"tolerance", 1e-6}};
    j["grid"] = {{"r0", t.grid.front()}, {"r1", t.grid.back()}, {"n", t.grid.size()}};
    j["diagnostics"] = {{"near_origin_slope", t.diag.near_origin_slope},
                        {"log_ratio_variation", t.diag.log_ratio_variation},
                        {"worst_node_error", t.diag.worst_node_error},
                        {"worst_node_r", t.diag.worst_node_r},
                        {"nonconverged_nodes", t.diag.nonconverged_nodes},
                        {"subtraction_terms", t.diag.subtraction_terms},
                        {"series_nodes", t.diag.series_nodes},
                        {"build_seconds", t.diag.build_seconds}};
    j["failures"] = t.diag.failures;
    j["failed"] = !t.diag.failures.empty();
    return j;
}

inline void write_profile(const ProfileTable& t, const std::filesystem::path& dir, const std::string& stem,
                          const std::string& hash) {
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / (stem + ".csv"), {"r", "F", "method", "alpha", "s", "N"});
    for (std::size_t i = 0; i < t.grid.size(); ++i)
        csv.row_strings({format_number(t.grid.node(i)), format_number(t.values[i]), to_string(t.method),
                         format_number(t.params.alpha), format_number(t.params.s), std::to_string(t.params.N)});
    json side = sidecar_base(hash);
    side.update(to_json(t));
    write_json(dir / (stem + ".json"), side);
}

inline void write_field(const SolutionField& f, const std::filesystem::path& dir, const std::string& stem,
                        const std::string& hash) {
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / (stem + ".csv"), {"r", "u", "t", "route"});
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        csv.row_strings({format_number(f.grid.node(i)), format_number(f.values[i]), format_number(f.t), to_string(f.route)});
    json side = sidecar_base(hash);
    side["params"] = to_json(f.params);
    side["datum"] = f.datum;
    side["t"] = f.t;
    side["route"] = to_string(f.route);
    side["mass_check"] = {{"datum_mass", f.datum_mass}, {"field_mass", f.mass}, {"relative_error", f.mass_error},
                          {"tolerance", 1e-4}, {"pass", f.mass_error <= 1e-4}};
    side["nonconverged_nodes"] = f.nonconverged;
    side["worst_node_error"] = f.worst_error;
    write_json(dir / (stem + ".json"), side);
}

inline json to_json(const ScenarioReport& r) {
    json j;
    j["id"] = to_string(r.id);
    j["params"] = r.params;
    j["datum"] = r.datum;
    j["window"] = r.window;
    j["norm"] = r.norm;
    j["predicted"] = {{"t_exponent", r.predicted.t_exponent},
                      {"g_exponent", r.predicted.g_exponent},
                      {"log_correction", to_string(r.predicted.log_correction)},
                      {"profile", r.predicted.profile},
                      {"theorem", r.predicted.theorem},
                      {"exponent", r.predicted_exponent}};
    if (r.measured) j["measured"] = {{"slope", r.measured->slope}, {"intercept", r.measured->intercept}, {"r2", r.measured->r2}};
    else j["measured"] = nullptr;
    j["curve"] = {{"t", r.times}, {"functional", r.curve}, {"norm", r.norm_curve}, {"window_lo", r.window_lo}, {"window_hi", r.window_hi}};
    j["terminal_error"] = r.terminal_error;
    j["trend_ratio"] = r.trend_ratio;
    j["monotone"] = r.monotone;
    j["terminal_upturn"] = r.terminal_upturn;
    j["comparison_constant"] = r.comparison_constant;
    j["checks"] = r.checks;
    j["verdict"] = r.passed ? "pass" : "fail";
    return j;
}

inline void write_report(const ScenarioReport& r, const std::filesystem::path& dir, const std::string& stem,
                         const std::string& hash) {
    std::filesystem::create_directories(dir);
    json side = sidecar_base(hash);
    side.update(to_json(r));
    write_json(dir / (stem + ".json"), side);
    CsvWriter csv(dir / (stem + ".csv"), {"t", "functional", "norm"});
    for (std::size_t i = 0; i < r.times.size(); ++i) csv.row({r.times[i], r.curve[i], r.norm_curve[i]});
}

// ---- profile cache ----

// Directory named by FRACHEAT_CACHE, if set.
inline std::optional<std::filesystem::path> cache_dir() {
    const char* e = std::getenv("FRACHEAT_CACHE");
    if (!e || !*e) return std::nullopt;
    return std::filesystem::path(e);
}

inline std::string profile_cache_key(const ModelParams& p, const RadialGrid& g, ProfileMethod m) {
    json k{{"params", to_json(p)}, {"method", to_string(m)}, {"r0", g.front()}, {"r1", g.back()}, {"n", g.size()},
           {"spacing", g.spacing() == Spacing::uniform ? "uniform" : "logarithmic"}, {"version", version()}};
    return "profile-" + config_hash(k);
}

inline void store_profile(const ProfileTable& t, const std::filesystem::path& file) {
    json j{{"params", to_json(t.params)},
           {"method", to_string(t.method)},
           {"grid", {{"r0", t.grid.front()}, {"r1", t.grid.back()}, {"n", t.grid.size()}}},
           {"values", t.values},
           {"value_at_origin", t.value_at_origin ? json(*t.value_at_origin) : json(nullptr)},
           {"diag", {{"worst_node_error", t.diag.worst_node_error},
                     {"worst_node_r", t.diag.worst_node_r},
                     {"nonconverged_nodes", t.diag.nonconverged_nodes},
                     {"subtraction_terms", t.diag.subtraction_terms},
                     {"series_nodes", t.diag.series_nodes}}}};
    std::filesystem::create_directories(file.parent_path());
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << j.dump();
    }
    std::filesystem::rename(tmp, file);
}

inline std::optional<ProfileTable> load_profile(const std::filesystem::path& file, const ModelParams& p, ProfileMethod m) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt;
    }
    ProfileTable t;
    t.params = p;
    t.method = m;
    t.law = near_origin_law(p);
    const auto& g = j.at("grid");
    t.grid = RadialGrid::logarithmic(p.N, g.at("r0").get<double>(), g.at("r1").get<double>(), g.at("n").get<std::size_t>());
    t.values = j.at("values").get<std::vector<double>>();
    if (t.values.size() != t.grid.size()) return std::nullopt;
    if (!j.at("value_at_origin").is_null()) t.value_at_origin = j.at("value_at_origin").get<double>();
    const auto& d = j.at("diag");
    t.diag.worst_node_error = d.at("worst_node_error").get<double>();
    t.diag.worst_node_r = d.at("worst_node_r").get<double>();
    t.diag.nonconverged_nodes = d.at("nonconverged_nodes").get<int>();
    t.diag.subtraction_terms = d.at("subtraction_terms").get<int>();
    t.diag.series_nodes = d.at("series_nodes").get<int>();
    detail::finish_table(t);
    return t;
}

// build_profile_unchecked through the FRACHEAT_CACHE directory when it is set.
inline ProfileTable cached_profile(const ModelParams& p, const RadialGrid& grid, ProfileMethod m) {
    const auto dir = cache_dir();
    if (dir && grid.spacing() == Spacing::logarithmic) {
        const auto file = *dir / (profile_cache_key(p, grid, m) + ".json");
        if (auto t = load_profile(file, p, m)) return *t;
        auto t = build_profile_unchecked(p, grid, m);
        store_profile(t, file);
        return t;
    }
    return build_profile_unchecked(p, grid, m);
}

}  // namespace fracheat
