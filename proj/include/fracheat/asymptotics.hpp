#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/core.hpp"
#include "fracheat/errors.hpp"
#include "fracheat/fields.hpp"
#include "fracheat/kernel.hpp"

namespace fracheat {

enum class ScenarioId {
    characteristic_lp,
    exterior_supercritical,
    intermediate,
    compact_supercritical,
    compact_critical_1d,
    compact_subcritical_1d,
    fast_matched,
    far_tail,
    supercritical_l2,
};

inline const std::vector<ScenarioId>& all_scenarios() {
    static const std::vector<ScenarioId> ids{
        ScenarioId::characteristic_lp,     ScenarioId::exterior_supercritical, ScenarioId::intermediate,
        ScenarioId::compact_supercritical, ScenarioId::compact_critical_1d,    ScenarioId::compact_subcritical_1d,
        ScenarioId::fast_matched,          ScenarioId::far_tail,               ScenarioId::supercritical_l2};
    return ids;
}

inline std::string to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::characteristic_lp: return "characteristic_lp";
        case ScenarioId::exterior_supercritical: return "exterior_supercritical";
        case ScenarioId::intermediate: return "intermediate";
        case ScenarioId::compact_supercritical: return "compact_supercritical";
        case ScenarioId::compact_critical_1d: return "compact_critical_1d";
        case ScenarioId::compact_subcritical_1d: return "compact_subcritical_1d";
        case ScenarioId::fast_matched: return "fast_matched";
        case ScenarioId::far_tail: return "far_tail";
        case ScenarioId::supercritical_l2: return "supercritical_l2";
    }
    return "?";
}

inline ScenarioId parse_scenario_id(const std::string& s) {
    for (auto id : all_scenarios())
        if (to_string(id) == s) return id;
    throw DomainError("unknown scenario id: " + s);
}

// Dyadic schedule t0 2^k, k = 0..K.
inline std::vector<double> dyadic_times(int K, double t0 = 1.0) {
    require(K >= 0 && K <= 20, "dyadic_times: K in 0..20");
    require(t0 > 0.0, "dyadic_times: t0 must be positive");
    std::vector<double> t;
    for (int k = 0; k <= K; ++k) t.push_back(std::ldexp(t0, k));
    return t;
}

struct Thresholds {
    bool trend = true;                   // final <= trend_factor * initial, no terminal upturn
    double trend_factor = 0.25;
    double wiggle = 0.05;                // tolerated relative increase between consecutive times
    std::optional<double> terminal_tol;  // bound on the functional at the last time
    std::optional<double> slope_tol;     // relative deviation of the fitted norm slope from the prediction
};

struct ScenarioSpec {
    ScenarioId id;
    ModelParams params;
    InitialDatum datum;
    ScaleWindow window;
    NormSpec norm;
    std::vector<double> times;
    Thresholds thresholds;
    // Upper radius for unbounded windows; infinity picks a multiple of the natural scale.
    double cap = kInf;
    // Upper end h(t) = o(t^{alpha/(N+2s-beta)}) of the matched window for slowly decaying data.
    std::optional<PowerLog> slow_cap;
    // Replace u by the comparison field (self-comparison; every functional is then zero).
    bool synthetic_reference = false;
    std::size_t nodes = 0;  // evaluation nodes per time; 0 picks a default
    unsigned threads = 0;

    ScenarioSpec(ScenarioId i, const ModelParams& p, const InitialDatum& d, const ScaleWindow& w, const NormSpec& n,
                 std::vector<double> t)
        : id(i), params(p), datum(d), window(w), norm(n), times(std::move(t)) {}

    void validate() const;
};

struct ScenarioReport {
    ScenarioId id = ScenarioId::characteristic_lp;
    std::string params;
    std::string datum;
    std::string window;
    std::string norm;
    RateDescriptor predicted;
    double predicted_exponent = 0.0;
    std::optional<RateEstimate> measured;  // fit of the norm of u over the schedule
    std::vector<double> times;
    std::vector<double> curve;             // error functional
    std::vector<double> norm_curve;        // norm of u over the window
    std::vector<double> window_lo, window_hi;
    double terminal_error = 0.0;
    double trend_ratio = 0.0;
    bool monotone = true;
    bool terminal_upturn = false;
    std::vector<std::string> checks;
    double comparison_constant = 0.0;      // kappa, F(0) or similar, as used
    bool passed = false;
};

namespace detail {

inline void check_sorted_times(const std::vector<double>& t) {
    require(!t.empty(), "scenario: empty time schedule");
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(t[i] > 0.0, "scenario: times must be positive");
        if (i > 0) require(t[i] > t[i - 1], "scenario: times must increase");
    }
}

inline bool is_power_tail_in_range(const InitialDatum& d, const ModelParams& p) {
    return d.family() == DatumFamily::power_tail && d.beta() > p.N && d.beta() < p.N + 2.0 * p.s;
}

}  // namespace detail

inline void ScenarioSpec::validate() const {
    params.validate();
    norm.validate();
    require(datum.dimension() == params.N, "scenario: datum dimension differs from N");
    detail::check_sorted_times(times);
    const double two_s = 2.0 * params.s;
    const auto pc = critical_exponent(params);
    const bool sub = pc.is_subcritical(norm.p);
    auto want = [&](WindowKind k) {
        if (window.kind != k)
            throw DomainError(to_string(id) + ": expects a " + to_string(k) + " window, got " + to_string(window.kind));
    };
    switch (id) {
        case ScenarioId::characteristic_lp:
            if (window.kind != WindowKind::whole_space && window.kind != WindowKind::characteristic)
                throw DomainError("characteristic_lp: expects a whole_space or characteristic window");
            if (!sub) throw HypothesisError("characteristic_lp: p must be subcritical");
            break;
        case ScenarioId::exterior_supercritical:
            want(WindowKind::exterior);
            if (sub) throw HypothesisError("exterior_supercritical: p must not be subcritical");
            if (!datum.hypotheses().in_DN) throw HypothesisError("exterior_supercritical: requires u0 in D_N");
            break;
        case ScenarioId::intermediate: want(WindowKind::intermediate); break;
        case ScenarioId::compact_supercritical:
            want(WindowKind::compact);
            if (!(two_s < params.N)) throw HypothesisError("compact_supercritical: requires 2s < N");
            break;
        case ScenarioId::compact_critical_1d:
            want(WindowKind::compact);
            if (!(two_s == params.N)) throw HypothesisError("compact_critical_1d: requires 2s = N = 1");
            require(times.front() > 1.0, "compact_critical_1d: times must exceed 1 (log t normalization)");
            break;
        case ScenarioId::compact_subcritical_1d:
            want(WindowKind::compact);
            if (!(two_s > params.N)) throw HypothesisError("compact_subcritical_1d: requires 2s > N = 1");
            break;
        case ScenarioId::fast_matched:
            want(WindowKind::fast_matched);
            if (slow_cap) {
                if (!detail::is_power_tail_in_range(datum, params))
                    throw HypothesisError("fast_matched with h(t): needs a power_tail datum with beta in (N, N+2s)");
                const double crit = params.alpha / (params.N + two_s - datum.beta());
                if (!(slow_cap->a < crit || (slow_cap->a == crit && slow_cap->b < 0.0)))
                    throw HypothesisError("fast_matched: h(t) must be o(t^{alpha/(N+2s-beta)})");
            } else if (!datum.hypotheses().in_DN) {
                throw HypothesisError("fast_matched: requires u0 in D_N (or a slow-decay cap h(t))");
            }
            break;
        case ScenarioId::far_tail:
            want(WindowKind::far_tail);
            if (!detail::is_power_tail_in_range(datum, params))
                throw HypothesisError("far_tail: needs a power_tail datum with beta in (N, N+2s)");
            // rebuild to check h against the matching scale
            ScaleWindow::far_tail(window.scale, params, datum.beta());
            break;
        case ScenarioId::supercritical_l2:
            want(WindowKind::whole_space);
            if (!(pc.kind == CriticalKind::finite && norm.p > pc.value))
                throw HypothesisError("supercritical_l2: p must exceed p_c = N/(N-2s)");
            break;
    }
    // the rate query applies the remaining theorem hypotheses
    if (id != ScenarioId::fast_matched || !slow_cap) predicted_rate(params, window, norm, datum.hypotheses());
}

// max over window nodes of |u / reference - 1|.
inline double relative_error_sup(const RadialField& u, const RadialField& reference, const RadialInterval& window) {
    require(u.values.size() == reference.values.size() && u.grid.size() == reference.grid.size(),
            "relative_error_sup: fields on different grids");
    for (std::size_t i = 0; i < u.grid.size(); ++i)
        require(u.grid.node(i) == reference.grid.node(i), "relative_error_sup: fields on different grids");
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < u.grid.size(); ++i) {
        const double r = u.grid.node(i);
        if (r < window.lo * (1.0 - 1e-12) || r > window.hi * (1.0 + 1e-12)) continue;
        any = true;
        if (!(reference.values[i] > 0.0)) throw DomainError("relative_error_sup: reference must be positive on the window");
        worst = std::max(worst, std::abs(u.values[i] / reference.values[i] - 1.0));
    }
    if (!any) throw DomainError("relative_error_sup: empty window");
    return worst;
}

struct CriticalDimensionRow {
    int N = 1;
    double characteristic = 0.0;  // (alpha N / 2s)(1 - 1/p)
    double compact = 0.0;         // alpha, or alpha/2s below N = 2s
    double dominant = 0.0;        // the smaller of the two
};

struct CriticalDimensionTable {
    double threshold = 0.0;  // 2sp/(p-1), or 2s at p = inf
    std::vector<CriticalDimensionRow> rows;
};

// Decay exponents of the L^p norm of u against the dimension. Above the threshold dimension the
// compact-set floor t^{-alpha} dominates and the exponent stops improving.
inline CriticalDimensionTable critical_dimension_table(double alpha, double s, double p, const std::vector<int>& dims) {
    require(alpha > 0.0 && alpha <= 1.0 && s > 0.0 && s <= 1.0, "critical_dimension_table: need alpha, s in (0,1]");
    if (!(p > 1.0)) throw DomainError("critical_dimension_table: p must exceed 1 (the threshold degenerates at p = 1)");
    require(!dims.empty(), "critical_dimension_table: empty dimension list");
    CriticalDimensionTable out;
    const double inv_p = p < kInf ? 1.0 / p : 0.0;
    out.threshold = p < kInf ? 2.0 * s * p / (p - 1.0) : 2.0 * s;
    for (int N : dims) {
        require(N >= 1, "critical_dimension_table: N must be positive");
        CriticalDimensionRow row;
        row.N = N;
        row.characteristic = alpha * N / (2.0 * s) * (1.0 - inv_p);
        row.compact = (2.0 * s > N) ? alpha / (2.0 * s) : alpha;
        row.dominant = std::min(row.characteristic, row.compact);
        out.rows.push_back(row);
    }
    return out;
}

namespace detail {

// u(., t) at the given radii by the convolution route.
inline std::vector<double> evaluate_solution(const InitialDatum& d, const ProfileTable& table, double t,
                                             const std::vector<double>& radii, unsigned threads) {
    std::vector<double> out(radii.size());
    parallel_for(radii.size(), [&](std::size_t i) { out[i] = convolution_point(d, table, t, radii[i]).value; }, threads);
    return out;
}

inline std::string describe_window(const ScaleWindow& w) {
    std::ostringstream os;
    os << to_string(w.kind);
    switch (w.kind) {
        case WindowKind::compact: os << "(mu=" << w.mu << ")"; break;
        case WindowKind::characteristic: os << "(nu=" << w.nu << ", mu=" << w.mu << ")"; break;
        case WindowKind::exterior: os << "(nu=" << w.nu << ")"; break;
        case WindowKind::fast_matched: os << "(nu=" << w.nu << ", cap=" << w.cap << ")"; break;
        case WindowKind::intermediate:
            os << "(g=" << w.scale.c << " t^" << w.scale.a << " log^" << w.scale.b << ", nu=" << w.nu << ", mu=" << w.mu << ")";
            break;
        case WindowKind::far_tail: os << "(h=" << w.scale.c << " t^" << w.scale.a << " log^" << w.scale.b << ")"; break;
        case WindowKind::whole_space: break;
    }
    return os.str();
}

inline std::string describe_norm(const NormSpec& n) {
    std::ostringstream os;
    os << (n.kind == NormKind::strong ? "L^" : "M^");
    if (n.p == kInf)
        os << "inf";
    else
        os << n.p;
    return os.str();
}

// Evaluation interval at time t, with unbounded windows truncated at the accuracy cap.
inline RadialInterval evaluation_interval(const ScenarioSpec& s, double t) {
    const auto& p = s.params;
    const double sigma = std::pow(t, p.scale_exponent());
    auto region = s.window.resolve(t, p);
    double cap = s.cap;
    if (!(cap < kInf)) {
        switch (s.window.kind) {
            case WindowKind::far_tail: cap = 100.0 * region.lo; break;
            case WindowKind::whole_space: cap = 1e4 * std::max(sigma, s.datum.scale()); break;
            default: cap = 1e3 * std::max(sigma, s.datum.scale()); break;
        }
    }
    region.hi = std::min(region.hi, cap);
    if (s.slow_cap) region.hi = std::min(region.hi, (*s.slow_cap)(t));
    if (!(region.hi > region.lo))
        throw DomainError(to_string(s.id) + ": window is empty at t=" + std::to_string(t) + " after the accuracy cap");
    return region;
}

inline RadialGrid evaluation_grid(const ScenarioSpec& s, const RadialInterval& region, double t) {
    const int N = s.params.N;
    if (region.lo == 0.0) {
        if (s.window.kind == WindowKind::compact) return RadialGrid::uniform(N, 0.0, region.hi, s.nodes ? s.nodes : 41);
        const double sigma = std::pow(t, s.params.scale_exponent());
        const double lo = 1e-6 * std::min(sigma, s.datum.scale());
        return RadialGrid::logarithmic(N, lo, region.hi, s.nodes ? s.nodes : 400);
    }
    return RadialGrid::logarithmic(N, region.lo, region.hi, s.nodes ? s.nodes : 61);
}

}  // namespace detail

// Runs the scenario's error functional over the schedule and applies the thresholds.
//   characteristic_lp, exterior_supercritical: t^{(alpha N/2s)(1-1/p)} ||u - MZ||_p on the window
//   intermediate, compact_*: ||u - P||_p / ||P||_p with P the limit profile (sup |u/P - 1| at p = inf)
//   fast_matched, far_tail: sup over the window of |u/P - 1|, P = MZ or A|x|^{-beta}
//   supercritical_l2: no functional; only the fitted slope of ||u||_p is judged
inline ScenarioReport run_scenario(const ScenarioSpec& spec, const ProfileTable& table) {
    spec.validate();
    const auto& p = spec.params;
    require(table.params.alpha == p.alpha && table.params.s == p.s && table.params.N == p.N,
            "run_scenario: profile table built for different parameters");
    ScenarioReport rep;
    rep.id = spec.id;
    rep.params = describe(p);
    rep.datum = spec.datum.describe();
    rep.window = detail::describe_window(spec.window);
    rep.norm = detail::describe_norm(spec.norm);
    rep.times = spec.times;
    if (spec.id != ScenarioId::fast_matched || !spec.slow_cap) {
        rep.predicted = predicted_rate(p, spec.window, spec.norm, spec.datum.hypotheses());
    } else {
        rep.predicted = predicted_rate(p, ScaleWindow::characteristic(1.0, 2.0), spec.norm, {true, true, true, kInf});
        rep.predicted.theorem = "slow decay";
    }
    rep.predicted_exponent = rep.predicted.exponent(spec.window);

    const double M = spec.datum.mass();
    const double two_s = 2.0 * p.s;
    const double inv_p = spec.norm.p < kInf ? 1.0 / spec.norm.p : 0.0;
    double constant = 0.0;
    switch (spec.id) {
        case ScenarioId::compact_supercritical:
        case ScenarioId::compact_critical_1d:
        case ScenarioId::compact_subcritical_1d:
        case ScenarioId::intermediate: constant = estimate_kappa(table).value; break;
        default: constant = M; break;
    }
    rep.comparison_constant = constant;

    for (double t : spec.times) {
        const auto region = detail::evaluation_interval(spec, t);
        const auto grid = detail::evaluation_grid(spec, region, t);
        const auto& r = grid.nodes();
        const double ta = std::pow(t, p.alpha);
        // comparison field
        std::vector<double> ref(r.size());
        switch (spec.id) {
            case ScenarioId::characteristic_lp:
            case ScenarioId::exterior_supercritical:
            case ScenarioId::fast_matched:
            case ScenarioId::supercritical_l2:
                for (std::size_t i = 0; i < r.size(); ++i) ref[i] = M * kernel_value(table, r[i], t);
                break;
            case ScenarioId::compact_supercritical: {
                const auto phi = riesz_potential(spec.datum, p, r, spec.threads);
                for (std::size_t i = 0; i < r.size(); ++i) ref[i] = constant * phi[i] / ta;
                break;
            }
            case ScenarioId::compact_critical_1d:
                for (auto& v : ref) v = M * constant * p.alpha * std::log(t) / ta;
                break;
            case ScenarioId::compact_subcritical_1d:
                for (auto& v : ref) v = M * constant * std::pow(t, -p.scale_exponent());
                break;
            case ScenarioId::intermediate:
                for (std::size_t i = 0; i < r.size(); ++i) {
                    if (two_s < p.N) ref[i] = M * constant / ta * std::pow(r[i], two_s - p.N);
                    else if (two_s == p.N) ref[i] = M * constant / ta * std::abs(std::log(r[i] * std::pow(t, -p.scale_exponent())));
                    else ref[i] = M * constant * std::pow(t, -p.scale_exponent());
                }
                break;
            case ScenarioId::far_tail:
                for (std::size_t i = 0; i < r.size(); ++i) ref[i] = spec.datum.amplitude() * std::pow(r[i], -spec.datum.beta());
                break;
        }
        const auto u = spec.synthetic_reference ? ref : detail::evaluate_solution(spec.datum, table, t, r, spec.threads);
        RadialField uf{grid, u};
        const RadialInterval whole{region.lo == 0.0 ? 0.0 : grid.front(), grid.back()};
        NormSpec strong = spec.norm;
        strong.kind = NormKind::strong;
        const bool weak = spec.norm.kind == NormKind::weak;
        auto norm_of = [&](const RadialField& f) {
            return weak ? weak_norm(f, whole, spec.norm.p) : lp_norm(f, whole, strong);
        };
        rep.norm_curve.push_back(norm_of(uf));
        rep.window_lo.push_back(region.lo);
        rep.window_hi.push_back(grid.back());

        double functional = 0.0;
        std::vector<double> diff(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - ref[i];
        const RadialField df{grid, diff}, rf{grid, ref};
        switch (spec.id) {
            case ScenarioId::characteristic_lp:
            case ScenarioId::exterior_supercritical:
                functional = std::pow(t, p.alpha * p.N / two_s * (1.0 - inv_p)) * norm_of(df);
                break;
            case ScenarioId::fast_matched:
            case ScenarioId::far_tail: functional = relative_error_sup(uf, rf, {grid.front(), grid.back()}); break;
            case ScenarioId::supercritical_l2: functional = rep.norm_curve.back(); break;
            default:
                if (spec.norm.p == kInf) functional = relative_error_sup(uf, rf, {grid.front(), grid.back()});
                else functional = norm_of(df) / norm_of(rf);
                break;
        }
        rep.curve.push_back(functional);
    }

    // verdict
    bool ok = true;
    auto record = [&](const std::string& name, double value, const std::string& rule, bool pass) {
        std::ostringstream os;
        os.precision(6);
        os << name << " = " << value << " (" << rule << "): " << (pass ? "pass" : "fail");
        rep.checks.push_back(os.str());
        ok = ok && pass;
    };
    const auto& c = rep.curve;
    const double w = spec.thresholds.wiggle;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i] > (1.0 + w) * c[i - 1]) rep.monotone = false;
    const std::size_t n = c.size();
    rep.terminal_upturn = (n >= 2 && c[n - 1] > (1.0 + w) * c[n - 2]) || (n >= 3 && c[n - 2] > (1.0 + w) * c[n - 3]);
    rep.trend_ratio = c.front() > 0.0 ? c.back() / c.front() : 0.0;
    rep.terminal_error = c.back();
    if (spec.times.size() >= 4) {
        bool positive = true;
        for (double v : rep.norm_curve) positive = positive && v > 0.0;
        if (positive) rep.measured = fit_rate(spec.times, rep.norm_curve);
    }
    const bool convergence = spec.id != ScenarioId::supercritical_l2;
    if (convergence && spec.thresholds.trend) {
        std::ostringstream rule;
        rule << "<= " << spec.thresholds.trend_factor;
        record("final/initial", rep.trend_ratio, rule.str(), c.front() == 0.0 ? c.back() == 0.0 : rep.trend_ratio <= spec.thresholds.trend_factor);
        record("terminal upturn", rep.terminal_upturn ? 1.0 : 0.0, "no rise beyond the wiggle", !rep.terminal_upturn);
    }
    if (convergence && spec.thresholds.terminal_tol) {
        std::ostringstream rule;
        rule << "<= " << *spec.thresholds.terminal_tol;
        record("terminal error", rep.terminal_error, rule.str(), rep.terminal_error <= *spec.thresholds.terminal_tol);
    }
    if (spec.thresholds.slope_tol) {
        std::ostringstream rule;
        rule << "|slope/" << rep.predicted_exponent << " - 1| <= " << *spec.thresholds.slope_tol;
        if (!rep.measured) {
            record("slope", 0.0, "needs at least 4 positive samples", false);
        } else {
            const double dev = std::abs(rep.measured->slope / rep.predicted_exponent - 1.0);
            record("slope", rep.measured->slope, rule.str(), dev <= *spec.thresholds.slope_tol);
        }
    }
    rep.passed = ok;
    return rep;
}

struct DominantExponent {
    int N = 1;
    double compact = 0.0;         // -slope of ||u||_{L^p(B_1)}
    double characteristic = 0.0;  // -slope of ||u||_{L^p(nu sigma < |x| < mu sigma)}
    double dominant = 0.0;
};

// Measured decay exponents on a compact ball and on the characteristic shell, fitted over times.
inline DominantExponent measure_dominant_exponent(const InitialDatum& d, const ProfileTable& table, double p,
                                                  const std::vector<double>& times, unsigned threads = 0) {
    const auto& par = table.params;
    require(d.dimension() == par.N, "measure_dominant_exponent: dimension mismatch");
    require(times.size() >= 4, "measure_dominant_exponent: need at least 4 times");
    NormSpec norm{p, NormKind::strong};
    std::vector<double> comp, chr;
    for (double t : times) {
        const auto gb = RadialGrid::uniform(par.N, 0.0, 1.0, 41);
        RadialField fb{gb, detail::evaluate_solution(d, table, t, gb.nodes(), threads)};
        comp.push_back(lp_norm(fb, {0.0, 1.0}, norm));
        const double sigma = std::pow(t, par.scale_exponent());
        const auto gc = RadialGrid::logarithmic(par.N, 0.5 * sigma, 2.0 * sigma, 61);
        RadialField fc{gc, detail::evaluate_solution(d, table, t, gc.nodes(), threads)};
        chr.push_back(lp_norm(fc, {gc.front(), gc.back()}, norm));
    }
    DominantExponent out;
    out.N = par.N;
    out.compact = -fit_rate(times, comp).slope;
    out.characteristic = -fit_rate(times, chr).slope;
    out.dominant = std::min(out.compact, out.characteristic);
    return out;
}

}  // namespace fracheat
