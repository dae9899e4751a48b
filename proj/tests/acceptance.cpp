// Acceptance runner: one PASS/FAIL line per criterion AC1..AC13.
//
//   acceptance                 run everything
//   acceptance --only AC7      run one criterion (repeatable)
//
// Settings come from presets/ACn.json (FRACHEAT_PRESETS overrides the directory).
// Reference values below are computed from closed forms, not from the library.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "fracheat/fracheat.hpp"

#ifndef FRACHEAT_PRESET_DIR
#define FRACHEAT_PRESET_DIR "presets"
#endif

using namespace fracheat;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!ok) detail << " [" << what << "]";
    }
};

fs::path preset_dir() {
    const char* e = std::getenv("FRACHEAT_PRESETS");
    return (e && *e) ? fs::path(e) : fs::path(FRACHEAT_PRESET_DIR);
}

const ProfileTable& table(const ModelParams& p) {
    static std::map<std::tuple<double, double, int>, ProfileTable> cache;
    const auto key = std::make_tuple(p.alpha, p.s, p.N);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, cached_profile(p, default_profile_grid(p.N), ProfileMethod::direct)).first;
    return it->second;
}

std::vector<ModelParams> params_list(const json& a) {
    std::vector<ModelParams> out;
    for (const auto& j : a) out.push_back(params_from_json(j));
    return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---- closed-form references ----

double erfcx_ref(double x) {
    const long double lx = x;
    return double(std::exp(lx * lx) * std::erfc(lx));
}

// -log r coefficient of F at N = 2s = 1: the order-one Riesz kernel on the line is -log|x|/pi.
double log_kappa_ref(double alpha) { return 1.0 / (std::tgamma(1.0 - alpha) * kPi); }

// r^{2s-N} coefficient of F for 2s < N.
double power_kappa_ref(double alpha, double s, int N) {
    return std::tgamma(0.5 * N - s) / (std::tgamma(1.0 - alpha) * std::pow(4.0, s) * std::pow(kPi, 0.5 * N) * std::tgamma(s));
}

// F(0) for N = 1 < 2s, by a Mellin evaluation of (1/pi) int_0^inf E_alpha(-eta^{2s}) d eta.
double origin_value_ref(double alpha, double s) {
    const double a = 1.0 / (2.0 * s);
    return std::tgamma(a) * std::tgamma(1.0 - a) / (2.0 * s * kPi * std::tgamma(1.0 - alpha * a));
}

// Riesz potential of exp(-|y|^2 / w^2) in R^3 with kernel |x-y|^{-2}.
double gaussian_potential_ref(double w, double x) {
    if (x == 0.0) return 2.0 * std::pow(kPi, 1.5) * w;
    auto f = [&](double r) { return r * std::exp(-r * r / (w * w)) * std::log((x + r) / std::abs(x - r)); };
    const double q = integrate_piecewise(f, {0.0, 0.5 * x, x, 2.0 * x + w, 12.0 * w}, 1e-12).value;
    return 2.0 * kPi / x * q;
}

double gaussian_mass_ref(int N, double w) { return std::pow(std::sqrt(kPi) * w, N); }

// ---- criteria ----

void ac1(const RunConfig& c, Outcome& o) {
    for (const auto& chk : c.acceptance->at("checks")) {
        const double alpha = chk.at("alpha"), xmax = chk.at("x_max"), step = chk.at("step"), tol = chk.at("tol");
        const bool exp_oracle = chk.at("oracle") == "exp";
        double worst = 0.0;
        for (int i = 0; i * step <= xmax + 1e-12; ++i) {
            const double x = i * step;
            worst = std::max(worst, rel(mittag_leffler(alpha, x), exp_oracle ? std::exp(-x) : erfcx_ref(x)));
        }
        o.detail << " alpha=" << alpha << ": " << worst;
        o.check(worst <= tol, "above " + format_number(tol));
    }
}

void ac2(const RunConfig& c, Outcome& o) {
    const auto& a = *c.acceptance;
    const double tol = a.at("order_tol");
    for (double alpha : a.at("alphas").get<std::vector<double>>()) {
        MittagLeffler ml(alpha);
        std::vector<double> x, y;
        for (int n : a.at("steps").get<std::vector<int>>()) {
            std::vector<double> u(n + 1);
            for (int i = 0; i <= n; ++i) u[i] = ml(std::pow(double(i) / n, alpha));
            x.push_back(std::log(1.0 / n));
            y.push_back(std::log(std::abs(caputo_l1_last(u, 1.0 / n, alpha) + u[n])));
        }
        const double order = detail::line_fit(x, y).slope;
        o.detail << " alpha=" << alpha << ": order " << std::setprecision(4) << order << " (want " << 2.0 - alpha << ")";
        std::ostringstream label;
        label << "order off at alpha=" << alpha;
        o.check(std::abs(order - (2.0 - alpha)) <= tol, label.str());
    }
}

void ac3(const RunConfig& c, Outcome& o) {
    double worst = 0.0;
    for (const auto& p : params_list(c.acceptance->at("params"))) {
        const double e = std::abs(profile_mass(table(p)) - 1.0);
        worst = std::max(worst, e);
        o.check(e <= c.acceptance->at("tol").get<double>(), describe(p));
    }
    o.detail << " max |int F - 1| = " << worst;
}

void ac4(const RunConfig& c, Outcome& o) {
    const auto& a = *c.acceptance;
    double worst = 0.0;
    for (const auto& p : params_list(a.at("params"))) {
        const auto& t = table(p);
        worst = std::max(worst, t.tail_variation);
        o.check(t.tail_variation <= a.at("variation_tol").get<double>(), describe(p));
    }
    const auto& pt = table(params_from_json(a.at("poisson")));
    const double e = rel(pt.kappa_hat, 1.0 / kPi);
    o.detail << " max plateau variation " << worst << "; Poisson plateau " << pt.kappa_hat << " vs 1/pi (rel " << e << ")";
    o.check(pt.tail_variation <= a.at("variation_tol").get<double>(), "Poisson plateau variation");
    o.check(e <= a.at("plateau_tol").get<double>(), "Poisson plateau");
}

void ac5(const RunConfig& c, Outcome& o) {
    const auto& a = *c.acceptance;
    const auto p = params_from_json(a.at("power"));
    const auto& t = table(p);
    const double want = 2.0 * p.s - p.N;
    const double e = rel(t.diag.near_origin_slope, want);
    const auto& tl = table(params_from_json(a.at("log")));
    o.detail << " slope " << t.diag.near_origin_slope << " vs " << want << " (rel " << e << "); -log r ratio variation "
             << tl.diag.log_ratio_variation;
    o.check(e <= a.at("slope_tol").get<double>(), "power slope");
    o.check(tl.diag.log_ratio_variation <= a.at("ratio_tol").get<double>(), "log law");
}

void ac6(const RunConfig& c, Outcome& o) {
    double worst = 0.0;
    for (const auto& p : params_list(c.acceptance->at("params"))) {
        const auto rep = check_gradient_bounds(table(p));
        const double e = rel(rep.tail_exponent, -(p.N + 2.0 * p.s + 1.0));
        worst = std::max(worst, e);
        o.check(e <= c.acceptance->at("tol").get<double>(), describe(p));
    }
    o.detail << " max relative exponent error " << worst;
}

void ac7(const RunConfig& c, Outcome& o) {
    const auto& p = *c.params;
    const auto d = datum_from_json(*c.datum, p.N);
    const auto grid = c.field_grid->build(p.N);
    for (double t : c.times) {
        const auto f = mild_solution_fourier(d, p, t, grid);
        const auto g = mild_solution_convolution(d, table(p), t, grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid.node(i) <= 10.0) worst = std::max(worst, rel(g.values[i], f.values[i]));
        o.detail << " t=" << t << ": " << worst;
        o.check(worst <= c.acceptance->at("tol").get<double>(), "t=" + format_number(t));
    }
}

ScenarioReport run(const ScenarioSpec& s) { return run_scenario(s, table(s.params)); }

void ac8(const RunConfig& c, Outcome& o) {
    for (const auto& s : c.scenarios) {
        const auto r = run(s);
        o.detail << " p=" << s.norm.p << ": ratio " << r.trend_ratio << (r.terminal_upturn ? " upturn" : "");
        o.check(r.passed, "p=" + format_number(s.norm.p));
    }
}

void ac9(const RunConfig& c, Outcome& o) {
    const auto& s = c.scenarios.at(0);
    const auto& p = s.params;
    const auto r = run(s);
    const double t = s.times.back(), k = power_kappa_ref(p.alpha, p.s, p.N);
    const auto& tab = table(p);
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double x = 0.05 * i;
        const double u = convolution_point(s.datum, tab, t, x).value;
        worst = std::max(worst, std::abs(std::pow(t, p.alpha) * u / (k * gaussian_potential_ref(s.datum.scale(), x)) - 1.0));
    }
    const double slope = r.measured ? r.measured->slope : 0.0;
    o.detail << " sup_B1 |t^a u/(kappa Phi) - 1| = " << worst << "; slope " << slope << " vs " << -p.alpha;
    o.check(worst <= c.acceptance->at("tol").get<double>(), "compact profile");
    o.check(r.measured && rel(slope, -p.alpha) <= c.acceptance->at("slope_tol").get<double>(), "slope");
}

void ac10(const RunConfig& c, Outcome& o) {
    const auto& p = *c.params;
    const auto& a = *c.acceptance;
    const double t = a.at("t"), tol = a.at("tol");
    const auto& tab = table(p);
    auto measure = [&](const InitialDatum& d) {
        const double M = gaussian_mass_ref(p.N, d.scale());
        const double u = convolution_point(d, tab, t, 0.0).value;
        return std::pow(t, p.alpha) / std::log(t) * u / (M * log_kappa_ref(p.alpha) * p.alpha) - 1.0;
    };
    const auto d = datum_from_json(*c.datum, p.N);
    const double e = measure(d);
    const double e1 = measure(InitialDatum::gaussian(p.N, a.at("unit_width")));
    o.detail << " width " << d.scale() << ": rel " << e << " (unit width: " << e1 << ")";
    o.check(std::abs(e) <= tol, "u(0,t) normalization");
    const auto r = run(c.scenarios.at(0));
    o.check(r.passed, "scenario");
}

void ac11(const RunConfig& c, Outcome& o) {
    const auto& p = *c.params;
    const auto& a = *c.acceptance;
    const double t = a.at("t"), tol = a.at("tol");
    const auto& tab = table(p);
    auto measure = [&](const InitialDatum& d) {
        const double M = gaussian_mass_ref(p.N, d.scale());
        const double u = convolution_point(d, tab, t, 0.0).value;
        return std::pow(t, p.scale_exponent()) * u / (M * origin_value_ref(p.alpha, p.s)) - 1.0;
    };
    const auto d = datum_from_json(*c.datum, p.N);
    const double e = measure(d);
    const double e1 = measure(InitialDatum::gaussian(p.N, a.at("unit_width")));
    o.detail << " width " << d.scale() << ": rel " << e << " (unit width: " << e1 << ")";
    o.check(std::abs(e) <= tol, "u(0,t) normalization");
    const auto r = run(c.scenarios.at(0));
    o.check(r.passed, "scenario");
}

void ac12(const RunConfig& c, Outcome& o) {
    for (const auto& s : c.scenarios) {
        const auto r = run(s);
        o.detail << " " << to_string(s.id) << ": " << r.terminal_error;
        o.check(r.passed && r.terminal_error <= c.acceptance->at("tol").get<double>(), to_string(s.id));
    }
}

void ac13(const RunConfig& c, Outcome& o) {
    const auto& a = *c.acceptance;
    const double alpha = a.at("alpha"), s = a.at("s"), q = a.at("p"), tol = a.at("tol");
    const auto dims = a.at("dims").get<std::vector<int>>();
    const auto times = times_from_json(a.at("times"));
    const auto tab = critical_dimension_table(alpha, s, q, dims);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const int N = dims[i];
        // characteristic scale: (alpha N / 2s)(1 - 1/p); compact sets: alpha once N >= 2s
        const double expect = std::min(alpha * N / (2.0 * s) * (1.0 - 1.0 / q), N >= 2.0 * s ? alpha : alpha * N / (2.0 * s));
        const ModelParams p{alpha, s, N};
        const auto m = measure_dominant_exponent(datum_from_json(*c.datum, N), table(p), q, times);
        o.detail << " N=" << N << ": " << std::setprecision(4) << m.dominant << " (table " << tab.rows[i].dominant << ")";
        o.check(std::abs(tab.rows[i].dominant - expect) <= 1e-12, "table N=" + std::to_string(N));
        o.check(rel(m.dominant, expect) <= tol, "N=" + std::to_string(N));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria AC1..AC13"};
    std::vector<std::string> only;
    app.add_option("--only", only, "Criterion to run (AC1..AC13), repeatable");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<void(const RunConfig&, Outcome&)>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3},   {"AC4", ac4},   {"AC5", ac5},   {"AC6", ac6},  {"AC7", ac7},
        {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}, {"AC11", ac11}, {"AC12", ac12}, {"AC13", ac13}};
    for (const auto& name : only) {
        bool known = false;
        for (const auto& [n, f] : criteria) known = known || n == name;
        if (!known) {
            std::cerr << "unknown criterion " << name << '\n';
            return 2;
        }
    }

    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        Outcome o;
        o.detail << std::setprecision(4);
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto cfg = load_config(preset_dir() / (name + ".json"));
            fn(cfg, o);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (cfg.acceptance && cfg.acceptance->contains("seconds")) {
                const double budget = cfg.acceptance->at("seconds");
                o.check(secs <= budget, "over the " + format_number(budget) + " s budget");
            }
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " error: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << o.detail.str() << "  (" << std::fixed
                  << std::setprecision(1) << secs << " s)" << std::defaultfloat << std::endl;
        if (!o.pass) ++failed;
    }
    return failed ? 1 : 0;
}
