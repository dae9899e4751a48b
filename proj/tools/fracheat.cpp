// fracheat: command-line front end.
//
//   fracheat ml --alpha 0.5 --x 1
//   fracheat profile --alpha 0.5 --s 0.5 --dim 3 --out out/
//   fracheat solve --preset AC7
//   fracheat potential --alpha 0.5 --s 0.5 --dim 3 --x 0 --x 2
//   fracheat verify --preset paper-map --out reports/
//   fracheat rates --alpha 0.5 --s 0.5 --dim 3 --p 2
//
// Exit codes: 0 success, 1 scenario failure, 2 usage or domain error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracheat/fracheat.hpp"

#ifndef FRACHEAT_PRESET_DIR
#define FRACHEAT_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace fracheat;

namespace {

enum Exit { kOk = 0, kScenarioFail = 1, kUsage = 2, kNumerical = 3 };

struct Options {
    std::string config;
    std::string preset;
    std::string out;
    std::optional<double> alpha, s, p;
    std::optional<int> dim;
    std::vector<double> t;
    std::vector<double> x;
    std::string x_range;
    std::string method;
    unsigned threads = 0;
    bool quiet = false;
};

class Log {
public:
    explicit Log(bool quiet) : quiet_(quiet) {}
    template <class... A>
    void operator()(const A&... a) const {
        if (quiet_) return;
        (std::cerr << ... << a) << '\n';
    }

private:
    bool quiet_;
};

fs::path preset_path(const std::string& name) {
    const char* env = std::getenv("FRACHEAT_PRESETS");
    const fs::path dir = (env && *env) ? fs::path(env) : fs::path(FRACHEAT_PRESET_DIR);
    const auto file = dir / (name + ".json");
    if (!fs::exists(file)) throw DomainError("unknown preset '" + name + "' (looked in " + dir.string() + ")");
    return file;
}

void check_dimension(int N) {
    if (N < 1 || N > 3) throw DomainError("unsupported dimension N=" + std::to_string(N) + ": N∈{1,2,3}");
}

// Config from --config or --preset, then overridden by individual flags.
RunConfig resolve_config(const Options& o) {
    if (!o.config.empty() && !o.preset.empty()) throw DomainError("give either --config or --preset, not both");
    RunConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    else if (!o.preset.empty()) c = load_config(preset_path(o.preset));
    if (o.alpha || o.s || o.dim) {
        ModelParams p = c.params.value_or(ModelParams{});
        if (o.alpha) p.alpha = *o.alpha;
        if (o.s) p.s = *o.s;
        if (o.dim) p.N = *o.dim;
        check_dimension(p.N);
        p.validate();
        c.params = p;
        if (c.datum) c.datum = to_json(datum_from_json(*c.datum, p.N));
    }
    if (!o.t.empty()) c.times = o.t;
    if (!o.x.empty()) c.points = o.x;
    if (!o.out.empty()) c.out = o.out;
    if (!o.method.empty()) c.method = parse_method(o.method);
    return c;
}

const ModelParams& need_params(const RunConfig& c) {
    if (!c.params) throw DomainError("no model parameters: pass --alpha/--s/--dim or a config with 'params'");
    check_dimension(c.params->N);
    return *c.params;
}

InitialDatum need_datum(const RunConfig& c) {
    const auto& p = need_params(c);
    if (!c.datum) return InitialDatum::gaussian(p.N, 1.0);
    return datum_from_json(*c.datum, p.N);
}

std::string time_tag(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%03zu", i);
    return buf;
}

// ---- subcommands ----

int cmd_ml(const Options& o) {
    if (!o.alpha) throw DomainError("ml: --alpha is required");
    std::vector<double> xs = o.x;
    if (!o.x_range.empty()) {
        double a = 0, b = 0;
        int n = 0;
        if (std::sscanf(o.x_range.c_str(), "%lf:%lf:%d", &a, &b, &n) != 3 || n < 2 || !(b > a))
            throw DomainError("ml: --x-range expects a:b:n with a < b and n >= 2");
        for (int i = 0; i < n; ++i) xs.push_back(a + (b - a) * i / (n - 1));
    }
    if (xs.empty()) throw DomainError("ml: give --x or --x-range");
    std::vector<std::pair<double, double>> v;
    for (double x : xs) v.emplace_back(mittag_leffler(*o.alpha, x), mittag_leffler_deriv(*o.alpha, x));
    std::cout << "# x E_alpha(-x) d/dx E_alpha(-x)  alpha=" << *o.alpha << '\n';
    std::cout << std::setprecision(10);
    for (std::size_t i = 0; i < xs.size(); ++i) std::cout << xs[i] << ' ' << v[i].first << ' ' << v[i].second << '\n';
    return kOk;
}

int cmd_profile(const Options& o) {
    const Log log(o.quiet);
    auto cfg = resolve_config(o);
    const auto& p = need_params(cfg);
    const auto hash = config_hash(to_json(cfg));
    log("building profile ", describe(p), " (", to_string(cfg.method), ")");
    const auto grid = cfg.profile_grid.build(p.N);
    const auto t = cached_profile(p, grid, cfg.method);
    write_profile(t, cfg.out, "profile", hash);
    std::cout << "kappa " << (t.kappa ? format_number(*t.kappa) : "n/a") << "\nkappa_hat " << format_number(t.kappa_hat)
              << "\nmass_error " << format_number(t.diag.mass_error) << '\n';
    if (!t.diag.failures.empty()) {
        for (const auto& f : t.diag.failures) std::cerr << "fracheat: profile invariant failed: " << f << '\n';
        return kNumerical;
    }
    return kOk;
}

int cmd_solve(const Options& o) {
    const Log log(o.quiet);
    auto cfg = resolve_config(o);
    const auto& p = need_params(cfg);
    const auto d = need_datum(cfg);
    if (cfg.times.empty()) throw DomainError("solve: no times (use --t or 'times')");
    for (double t : cfg.times)
        if (!(t > 0.0)) throw DomainError("solve: times must be positive");
    const auto hash = config_hash(to_json(cfg));
    const auto grid = (cfg.field_grid ? *cfg.field_grid : GridSpec{Spacing::logarithmic, 1e-3, 1e3, 241}).build(p.N);

    std::optional<ProfileTable> table;
    auto need_table = [&]() -> const ProfileTable& {
        if (!table) {
            table = cached_profile(p, cfg.profile_grid.build(p.N), cfg.method);
            if (!table->diag.failures.empty()) throw NumericalError("profile invariant failed: " + table->diag.failures.front());
        }
        return *table;
    };

    const bool both = cfg.routes.size() == 2;
    json agreement = sidecar_base(hash);
    agreement["tolerance"] = 1e-3;
    agreement["times"] = json::array();
    bool disagree = false, mass_fail = false;
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
        const double t = cfg.times[k];
        std::map<std::string, SolutionField> fields;
        for (const auto& route : cfg.routes) {
            log("solving t=", t, " via ", route);
            if (route == "fourier") fields.emplace(route, mild_solution_fourier(d, p, t, grid, o.threads));
            else fields.emplace(route, mild_solution_convolution(d, need_table(), t, grid, o.threads));
            const auto& f = fields.at(route);
            write_field(f, cfg.out, "field_" + route + "_" + time_tag(k), hash);
            if (f.mass_error > 1e-4) mass_fail = true;
            std::cout << "t=" << format_number(t) << " route=" << route << " mass=" << format_number(f.mass)
                      << " mass_error=" << format_number(f.mass_error) << '\n';
        }
        if (both) {
            const auto& a = fields.at("fourier");
            const auto& b = fields.at("convolution");
            double worst = 0.0, worst_ball = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double e = std::abs(b.values[i] - a.values[i]) / std::abs(a.values[i]);
                worst = std::max(worst, e);
                if (grid.node(i) <= 10.0) worst_ball = std::max(worst_ball, e);
            }
            agreement["times"].push_back({{"t", t}, {"max_relative_difference", worst}, {"max_relative_difference_B10", worst_ball}});
            std::cout << "t=" << format_number(t) << " route agreement " << format_number(worst) << '\n';
            if (worst > 1e-3) disagree = true;
        }
    }
    if (both) {
        agreement["pass"] = !disagree;
        write_json(fs::path(cfg.out) / "agreement.json", agreement);
    }
    if (disagree) {
        std::cerr << "fracheat: routes disagree by more than 1e-3\n";
        return kNumerical;
    }
    // a grid that stops short of the tail cannot conserve mass; the sidecar records it
    if (mass_fail) log("warning: mass check above 1e-4 (does the field grid reach the tail?)");
    return kOk;
}

int cmd_potential(const Options& o) {
    auto cfg = resolve_config(o);
    const auto& p = need_params(cfg);
    const auto d = need_datum(cfg);
    if (cfg.points.empty()) throw DomainError("potential: no evaluation points (use --x or 'points')");
    const auto hash = config_hash(to_json(cfg));
    const auto phi = riesz_potential(d, p, cfg.points, o.threads);
    fs::create_directories(cfg.out);
    CsvWriter csv(fs::path(cfg.out) / "potential.csv", {"r", "phi"});
    for (std::size_t i = 0; i < phi.size(); ++i) {
        csv.row({cfg.points[i], phi[i]});
        std::cout << format_number(cfg.points[i]) << ' ' << format_number(phi[i]) << '\n';
    }
    json side = sidecar_base(hash);
    side["params"] = to_json(p);
    side["datum"] = to_json(d);
    side["kernel_exponent"] = 2.0 * p.s - p.N;
    write_json(fs::path(cfg.out) / "potential.json", side);
    return kOk;
}

int cmd_verify(const Options& o) {
    const Log log(o.quiet);
    auto cfg = resolve_config(o);
    if (cfg.scenarios.empty()) throw DomainError("nothing to verify");
    for (auto& s : cfg.scenarios) {
        check_dimension(s.params.N);
        s.validate();
        s.threads = o.threads;
    }
    const auto hash = config_hash(to_json(cfg));
    std::map<std::tuple<double, double, int>, ProfileTable> tables;
    fs::create_directories(cfg.out);
    CsvWriter summary(fs::path(cfg.out) / "summary.csv",
                      {"index", "id", "alpha", "s", "N", "terminal_error", "trend_ratio", "slope", "predicted_exponent", "verdict"});
    int failures = 0;
    for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
        const auto& s = cfg.scenarios[i];
        const auto key = std::make_tuple(s.params.alpha, s.params.s, s.params.N);
        auto it = tables.find(key);
        if (it == tables.end()) {
            log("building profile ", describe(s.params));
            auto t = cached_profile(s.params, default_profile_grid(s.params.N), cfg.method);
            if (!t.diag.failures.empty()) throw NumericalError("profile invariant failed: " + t.diag.failures.front());
            it = tables.emplace(key, std::move(t)).first;
        }
        log("running ", to_string(s.id), " (", describe(s.params), ")");
        const auto r = run_scenario(s, it->second);
        char stem[64];
        std::snprintf(stem, sizeof stem, "%02zu_%s", i, to_string(s.id).c_str());
        write_report(r, cfg.out, stem, hash);
        summary.row_strings({std::to_string(i), to_string(s.id), format_number(s.params.alpha), format_number(s.params.s),
                             std::to_string(s.params.N), format_number(r.terminal_error), format_number(r.trend_ratio),
                             r.measured ? format_number(r.measured->slope) : "", format_number(r.predicted_exponent),
                             r.passed ? "pass" : "fail"});
        std::cout << (r.passed ? "PASS " : "FAIL ") << stem << "  terminal=" << r.terminal_error << '\n';
        for (const auto& c : r.checks) log("  ", c);
        if (!r.passed) ++failures;
    }
    std::cout << cfg.scenarios.size() - failures << "/" << cfg.scenarios.size() << " scenarios passed\n";
    return failures ? kScenarioFail : kOk;
}

int cmd_rates(const Options& o) {
    auto cfg = resolve_config(o);
    const auto& p = need_params(cfg);
    const double q = o.p.value_or(2.0);
    const NormSpec norm = NormSpec::strong(q);
    const auto pc = critical_exponent(p);
    std::cout << describe(p) << "  p=" << q << "  p_c=" << pc.label() << (pc.is_subcritical(q) ? " (subcritical)" : " (supercritical)")
              << '\n';
    const DatumHypotheses hyp{true, true, true, kInf};
    const std::vector<std::pair<std::string, ScaleWindow>> windows{
        {"whole space", ScaleWindow::whole_space()},
        {"|x| ~ t^{alpha/2s}", ScaleWindow::characteristic(0.5, 2.0)},
        {"|x| > nu t^{alpha/2s}", ScaleWindow::exterior(0.5)},
        {"|x| < 1", ScaleWindow::compact(1.0)},
    };
    for (const auto& [name, w] : windows) {
        std::cout << "  " << std::left << std::setw(24) << name;
        try {
            const auto r = predicted_rate(p, w, norm, hyp);
            std::cout << "t^" << r.t_exponent;
            if (r.log_correction != LogCorrection::none) std::cout << " x " << to_string(r.log_correction);
            std::cout << "  profile " << r.profile << "  [" << r.theorem << "]\n";
        } catch (const std::invalid_argument& e) {
            std::cout << "n/a (" << e.what() << ")\n";
        }
    }
    if (q > 1.0) {
        std::vector<int> dims;
        for (int n = 1; n <= std::max(3, p.N); ++n) dims.push_back(n);
        const auto tab = critical_dimension_table(p.alpha, p.s, q, dims);
        std::cout << "critical dimension 2sp/(p-1) = " << tab.threshold << '\n';
        std::cout << "  N  characteristic  compact  dominant\n";
        for (const auto& r : tab.rows)
            std::cout << "  " << r.N << "  " << std::setw(14) << r.characteristic << "  " << std::setw(7) << r.compact << "  "
                      << r.dominant << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional-in-time, fractional-in-space heat equation: kernels, solutions and decay rates"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "JSON run configuration");
    app.add_option("--preset", o.preset, "Named preset (FRACHEAT_PRESETS overrides the preset directory)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--alpha", o.alpha, "Time order alpha in (0,1]");
    app.add_option("--s", o.s, "Space order s in (0,1]");
    app.add_option("--dim", o.dim, "Dimension N");
    app.add_option("--p", o.p, "Norm exponent for rates");
    app.add_option("--t", o.t, "Time(s)");
    app.add_option("--x", o.x, "Point(s) for ml and potential");
    app.add_option("--x-range", o.x_range, "a:b:n grid for ml");
    app.add_option("--method", o.method, "Profile method")->check(CLI::IsMember({"direct", "subordination"}));
    app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    app.add_flag("--quiet", o.quiet, "Suppress progress messages");

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Sub subs[] = {
        {"ml", "Evaluate E_alpha(-x) and its derivative", cmd_ml},
        {"profile", "Build a kernel profile and write CSV + sidecar", cmd_profile},
        {"solve", "Mild solutions by the Fourier and/or convolution route", cmd_solve},
        {"potential", "Riesz potential of the datum (2s < N)", cmd_potential},
        {"verify", "Run decay-rate scenarios and write reports", cmd_verify},
        {"rates", "Predicted rates and the critical dimension table", cmd_rates},
    };
    int (*run)(const Options&) = nullptr;
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->callback([&run, f = s.run] { run = f; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        return run(o);
    } catch (const HypothesisError& e) {
        std::cerr << "fracheat: hypothesis not met: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "fracheat: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "fracheat: numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "fracheat: bad configuration: " << e.what() << '\n';
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "fracheat: " << e.what() << '\n';
        return kUsage;
    }
}
