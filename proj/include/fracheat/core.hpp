#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/errors.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ModelParams {
    double alpha = 0.5;
    double s = 0.5;
    int N = 1;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0,1]");
        if (!(s > 0.0 && s <= 1.0)) throw DomainError("s must lie in (0,1]");
        if (N < 1) throw DomainError("dimension N must be a positive integer");
    }
    // Similarity exponent alpha/(2s) of the characteristic scale t^{alpha/2s}.
    double scale_exponent() const { return alpha / (2.0 * s); }
    bool operator==(const ModelParams&) const = default;
};

inline std::string describe(const ModelParams& p) {
    std::ostringstream os;
    os << "alpha=" << p.alpha << " s=" << p.s << " N=" << p.N;
    return os.str();
}

enum class CriticalKind { finite, infinite, all_subcritical };

struct CriticalExponent {
    CriticalKind kind = CriticalKind::finite;
    double value = kInf;  // p_c; +inf for the two markers

    // p in the range where Z(., t) is p-integrable.
    bool is_subcritical(double p) const {
        switch (kind) {
            case CriticalKind::finite: return p < value;
            case CriticalKind::infinite: return p < kInf;
            case CriticalKind::all_subcritical: return true;
        }
        return false;
    }
    std::string label() const {
        if (kind == CriticalKind::infinite) return "inf";
        if (kind == CriticalKind::all_subcritical) return "all-subcritical";
        std::ostringstream os;
        os.precision(17);
        os << value;
        return os.str();
    }
};

inline CriticalExponent critical_exponent(const ModelParams& p) {
    p.validate();
    const double two_s = 2.0 * p.s;
    if (p.N > two_s) return {CriticalKind::finite, p.N / (p.N - two_s)};
    if (p.N == two_s) return {CriticalKind::infinite, kInf};
    return {CriticalKind::all_subcritical, kInf};
}

enum class NormKind { strong, weak };

struct NormSpec {
    double p = 2.0;
    NormKind kind = NormKind::strong;

    void validate() const {
        if (!(p >= 1.0)) throw DomainError("norm exponent p must be >= 1");
        if (kind == NormKind::weak && !(p < kInf)) throw DomainError("weak (Marcinkiewicz) norm requires finite p");
    }
    static NormSpec strong(double p) { return {p, NormKind::strong}; }
    static NormSpec weak(double p) { return {p, NormKind::weak}; }
};

// |S^{N-1}|
inline double sphere_area(int N) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

inline double ball_volume(int N, double r) { return sphere_area(N) / N * std::pow(r, N); }

enum class Spacing { uniform, logarithmic };

// Radial nodes with quadrature weights for int f(|x|) dx over the covered shell.
class RadialGrid {
public:
    RadialGrid() = default;

    static RadialGrid uniform(int N, double r0, double r1, std::size_t n) {
        require(n >= 2, "RadialGrid: need at least two nodes");
        require(r0 >= 0.0 && r1 > r0, "RadialGrid: need 0 <= r0 < r1");
        RadialGrid g;
        g.N_ = N;
        g.spacing_ = Spacing::uniform;
        g.nodes_.resize(n);
        for (std::size_t i = 0; i < n; ++i) g.nodes_[i] = r0 + (r1 - r0) * double(i) / double(n - 1);
        g.nodes_.back() = r1;
        g.step_ = (r1 - r0) / double(n - 1);
        g.finish();
        return g;
    }

    static RadialGrid logarithmic(int N, double r0, double r1, std::size_t n) {
        require(n >= 2, "RadialGrid: need at least two nodes");
        require(r0 > 0.0 && r1 > r0, "RadialGrid: logarithmic spacing needs 0 < r0 < r1");
        RadialGrid g;
        g.N_ = N;
        g.spacing_ = Spacing::logarithmic;
        g.nodes_.resize(n);
        const double l0 = std::log(r0), l1 = std::log(r1);
        g.step_ = (l1 - l0) / double(n - 1);
        for (std::size_t i = 0; i < n; ++i) g.nodes_[i] = std::exp(l0 + g.step_ * double(i));
        g.nodes_.front() = r0;
        g.nodes_.back() = r1;
        g.finish();
        return g;
    }

    int dimension() const { return N_; }
    Spacing spacing() const { return spacing_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    double node(std::size_t i) const { return nodes_[i]; }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }
    // Spacing in r (uniform) or in log r (logarithmic).
    double step() const { return step_; }
    // Volume of the ball inside the first node.
    double origin_cap() const { return ball_volume(N_, nodes_.front()); }

    // Weighted sum of f over nodes [i0, i1] with end corrections for that sub-range.
    double integrate(const std::vector<double>& f, std::size_t i0, std::size_t i1) const {
        require(f.size() == nodes_.size(), "RadialGrid::integrate: size mismatch");
        require(i0 < i1 && i1 < nodes_.size(), "RadialGrid::integrate: bad node range");
        const auto g = gregory_weights(i1 - i0 + 1);
        CompensatedSum s;
        for (std::size_t i = i0; i <= i1; ++i) s += g[i - i0] * measure_[i] * f[i];
        return s.value();
    }
    double integrate(const std::vector<double>& f) const { return integrate(f, 0, nodes_.size() - 1); }

    // Outward snapping of [a, b] to node indices.
    std::pair<std::size_t, std::size_t> snap(double a, double b) const {
        auto hi_it = std::lower_bound(nodes_.begin(), nodes_.end(), b * (1.0 - 1e-12));
        std::size_t i1 = (hi_it == nodes_.end()) ? nodes_.size() - 1 : std::size_t(hi_it - nodes_.begin());
        auto lo_it = std::upper_bound(nodes_.begin(), nodes_.end(), a * (1.0 + 1e-12));
        std::size_t i0 = (lo_it == nodes_.begin()) ? 0 : std::size_t(lo_it - nodes_.begin()) - 1;
        return {i0, i1};
    }

private:
    void finish() {
        require(N_ >= 1, "RadialGrid: dimension must be positive");
        const double w = sphere_area(N_);
        measure_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double r = nodes_[i];
            measure_[i] = spacing_ == Spacing::uniform ? step_ * w * std::pow(r, N_ - 1) : step_ * w * std::pow(r, N_);
        }
        const auto g = gregory_weights(nodes_.size());
        weights_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) weights_[i] = g[i] * measure_[i];
    }

    int N_ = 1;
    Spacing spacing_ = Spacing::uniform;
    double step_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> measure_;  // step times surface measure, before end corrections
    std::vector<double> weights_;
};

struct RadialField {
    RadialGrid grid;
    std::vector<double> values;
};

struct RadialInterval {
    double lo = 0.0;
    double hi = kInf;
};

// c t^a (log t)^b
struct PowerLog {
    double c = 1.0;
    double a = 0.0;
    double b = 0.0;

    double operator()(double t) const {
        require(t > 0.0, "scale function: t must be positive");
        if (b == 0.0) return c * std::pow(t, a);
        require(t > 1.0, "scale function with a log factor needs t > 1");
        return c * std::pow(t, a) * std::pow(std::log(t), b);
    }
};

enum class WindowKind { compact, characteristic, intermediate, exterior, fast_matched, far_tail, whole_space };

inline std::string to_string(WindowKind k) {
    switch (k) {
        case WindowKind::compact: return "compact";
        case WindowKind::characteristic: return "characteristic";
        case WindowKind::intermediate: return "intermediate";
        case WindowKind::exterior: return "exterior";
        case WindowKind::fast_matched: return "fast_matched";
        case WindowKind::far_tail: return "far_tail";
        case WindowKind::whole_space: return "whole_space";
    }
    return "?";
}

struct ScaleWindow {
    WindowKind kind = WindowKind::whole_space;
    double nu = 0.0;
    double mu = 0.0;
    double cap = kInf;
    PowerLog scale;  // g for intermediate, h for far_tail

    static ScaleWindow compact(double mu) {
        require(mu > 0.0, "compact window: mu must be positive");
        return {WindowKind::compact, 0.0, mu, kInf, {}};
    }
    static ScaleWindow characteristic(double nu, double mu) {
        require(nu > 0.0 && mu > nu, "characteristic window: need 0 < nu < mu");
        return {WindowKind::characteristic, nu, mu, kInf, {}};
    }
    static ScaleWindow exterior(double nu) {
        require(nu > 0.0, "exterior window: nu must be positive");
        return {WindowKind::exterior, nu, 0.0, kInf, {}};
    }
    static ScaleWindow fast_matched(double nu, double cap = kInf) {
        require(nu > 0.0 && cap > 0.0, "fast-matched window: nu and cap must be positive");
        return {WindowKind::fast_matched, nu, 0.0, cap, {}};
    }
    static ScaleWindow whole_space() { return {}; }

    // nu g(t) < |x| < mu g(t) with g -> infinity and g = o(t^{alpha/2s}).
    static ScaleWindow intermediate(const PowerLog& g, double nu, double mu, const ModelParams& p) {
        require(g.c > 0.0, "intermediate window: g coefficient must be positive");
        require(nu > 0.0 && mu > nu, "intermediate window: need 0 < nu < mu");
        const double crit = p.scale_exponent();
        if (!(g.a > 0.0 || (g.a == 0.0 && g.b > 0.0)))
            throw HypothesisError("intermediate window: g(t) must grow to infinity");
        if (g.a == crit && g.b == 0.0) return characteristic(nu * g.c, mu * g.c);
        if (g.a > crit || (g.a == crit && g.b > 0.0))
            throw HypothesisError("intermediate window: g(t) must be o(t^{alpha/2s})");
        return {WindowKind::intermediate, nu, mu, kInf, g};
    }

    // |x| >= h(t) with h(t)/t^{alpha/(N+2s-beta)} -> infinity, for a datum tail |x|^{-beta}.
    static ScaleWindow far_tail(const PowerLog& h, const ModelParams& p, double beta) {
        require(h.c > 0.0, "far-tail window: h coefficient must be positive");
        if (!(beta > p.N && beta < p.N + 2.0 * p.s))
            throw HypothesisError("far-tail window: needs datum decay beta in (N, N+2s)");
        const double crit = p.alpha / (p.N + 2.0 * p.s - beta);
        if (!(h.a > crit || (h.a == crit && h.b > 0.0)))
            throw HypothesisError("far-tail window: h(t) must outgrow t^{alpha/(N+2s-beta)}");
        return {WindowKind::far_tail, 0.0, 0.0, kInf, h};
    }

    RadialInterval resolve(double t, const ModelParams& p) const {
        require(t > 0.0, "window: t must be positive");
        const double sigma = std::pow(t, p.scale_exponent());
        switch (kind) {
            case WindowKind::compact: return {0.0, mu};
            case WindowKind::characteristic: return {nu * sigma, mu * sigma};
            case WindowKind::intermediate: {
                const double g = scale(t);
                return {nu * g, mu * g};
            }
            case WindowKind::exterior: return {nu * sigma, kInf};
            case WindowKind::fast_matched: return {nu * sigma, cap};
            case WindowKind::far_tail: return {scale(t), kInf};
            case WindowKind::whole_space: return {0.0, kInf};
        }
        return {};
    }
};

struct RateEstimate {
    std::vector<double> times;
    std::vector<double> values;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline RateEstimate fit_rate(const std::vector<double>& times, const std::vector<double>& values) {
    require(times.size() == values.size(), "fit_rate: size mismatch");
    require(times.size() >= 4, "fit_rate: need at least 4 samples");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw DomainError("fit_rate: nonpositive time");
        if (!(values[i] > 0.0)) throw DomainError("fit_rate: nonpositive value");
        if (i > 0 && !(times[i] > times[i - 1])) throw DomainError("fit_rate: times must increase");
    }
    const double n = double(times.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        mx += std::log(times[i]);
        my += std::log(values[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dx = std::log(times[i]) - mx, dy = std::log(values[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    RateEstimate r;
    r.times = times;
    r.values = values;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    r.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return r;
}

enum class LogCorrection { none, times_log_t, over_log_g_t };

inline std::string to_string(LogCorrection c) {
    switch (c) {
        case LogCorrection::none: return "none";
        case LogCorrection::times_log_t: return "log t";
        case LogCorrection::over_log_g_t: return "1/|log(g t^-alpha)|";
    }
    return "?";
}

struct RateDescriptor {
    double t_exponent = 0.0;
    double g_exponent = 0.0;  // exponent of g(t) (intermediate) or h(t) (far tail)
    LogCorrection log_correction = LogCorrection::none;
    std::string profile;      // limit profile tag
    std::string theorem;      // short name of the covering statement

    // Total exponent of t for a window scale c t^a (log t)^b, ignoring log factors.
    double exponent(const ScaleWindow& w) const { return t_exponent + g_exponent * w.scale.a; }
};

// Hypotheses on the datum that some statements need beyond integrability.
struct DatumHypotheses {
    bool in_DN = false;     // |u0(x)| <= C |x|^{-N} outside a ball
    bool local_lp = false;  // u0 in L^p_loc (or L^q_loc, q > 1, when p = inf)
    bool in_lp = false;     // u0 in L^p
    double beta = kInf;     // decay exponent of the datum tail
};

inline RateDescriptor predicted_rate(const ModelParams& p, const ScaleWindow& w, const NormSpec& norm,
                                     const DatumHypotheses& hyp = {}) {
    p.validate();
    norm.validate();
    const auto pc = critical_exponent(p);
    const bool sub = pc.is_subcritical(norm.p);
    const double inv_p = norm.p < kInf ? 1.0 / norm.p : 0.0;
    const double two_s = 2.0 * p.s;
    const double char_exp = -(p.alpha * p.N / two_s) * (1.0 - inv_p);
    RateDescriptor r;
    switch (w.kind) {
        case WindowKind::whole_space:
            if (sub) {
                r.t_exponent = char_exp;
                r.profile = "MZ";
                r.theorem = "L^p";
                return r;
            }
            if (pc.kind == CriticalKind::finite && norm.p > pc.value) {
                if (!hyp.in_lp) throw HypothesisError("supercritical whole-space rate: missing hypothesis u0 in L^p");
                r.t_exponent = -p.alpha;
                r.profile = "kappa*Phi";
                r.theorem = "supercritical L^p";
                return r;
            }
            throw HypothesisError("whole-space rate: p = p_c (or p = inf at N = 2s) is not covered");
        case WindowKind::characteristic:
        case WindowKind::exterior:
        case WindowKind::fast_matched:
            if (!sub && !hyp.in_DN)
                throw HypothesisError("outer-region rate at non-subcritical p: missing hypothesis u0 in D_N");
            r.t_exponent = char_exp;
            r.profile = "MZ";
            r.theorem = sub ? "L^p" : "supercritical exterior";
            return r;
        case WindowKind::intermediate:
            if (!sub && !hyp.in_DN)
                throw HypothesisError("intermediate-scale rate at non-subcritical p: missing hypothesis u0 in D_N");
            r.theorem = "intermediate";
            if (two_s < p.N) {
                r.t_exponent = -p.alpha;
                r.g_exponent = two_s - p.N * (1.0 - inv_p);
                r.profile = "M*kappa*E_{N,s}";
            } else if (two_s == p.N) {
                r.t_exponent = -p.alpha;
                r.g_exponent = inv_p;
                r.log_correction = LogCorrection::over_log_g_t;
                r.profile = "M*kappa*|log(|x| t^-alpha/2s)|";
            } else {
                r.t_exponent = -p.alpha / two_s;
                r.g_exponent = inv_p;
                r.profile = "M*F(0)";
            }
            return r;
        case WindowKind::compact:
            if (two_s < p.N) {
                const bool at_pc = pc.kind == CriticalKind::finite && norm.p == pc.value;
                if (at_pc && norm.kind == NormKind::strong && !hyp.local_lp)
                    throw HypothesisError("compact-set rate at p = p_c: needs the Marcinkiewicz norm or u0 in L^p_loc");
                if (!sub && !at_pc && !hyp.local_lp)
                    throw HypothesisError("compact-set rate at non-subcritical p: missing hypothesis u0 in L^p_loc");
                r.t_exponent = -p.alpha;
                r.profile = "kappa*Phi";
                r.theorem = "compact, 2s<N";
            } else if (two_s == p.N) {
                if (norm.p == kInf && !hyp.local_lp)
                    throw HypothesisError("compact-set rate at p = inf: missing hypothesis u0 in L^q_loc, q > 1");
                r.t_exponent = -p.alpha;
                r.log_correction = LogCorrection::times_log_t;
                r.profile = "M*kappa*alpha";
                r.theorem = "compact, 2s=N=1";
            } else {
                r.t_exponent = -p.alpha / two_s;
                r.profile = "M*F(0)";
                r.theorem = "compact, 2s>N=1";
            }
            return r;
        case WindowKind::far_tail:
            if (!(hyp.beta > p.N && hyp.beta < p.N + two_s))
                throw HypothesisError("far-tail rate: missing hypothesis |x|^beta u0 -> A with beta in (N, N+2s)");
            r.t_exponent = 0.0;
            r.g_exponent = p.N * inv_p - hyp.beta;
            r.profile = "A|x|^-beta";
            r.theorem = "far tail";
            return r;
    }
    throw HypothesisError("uncovered window");
}

namespace detail {

struct Coverage {
    std::size_t i0 = 0, i1 = 0;
    bool cap = false;  // include the ball inside the first node
};

inline Coverage cover(const RadialGrid& g, const RadialInterval& region) {
    require(region.hi > region.lo, "region is empty");
    const double first = g.front(), last = g.back();
    if (region.hi > last * (1.0 + 1e-12)) throw DomainError("region not covered by grid");
    Coverage c;
    if (region.lo < first * (1.0 - 1e-12)) {
        if (region.lo != 0.0) throw DomainError("region not covered by grid");
        c.cap = first > 0.0;
    }
    auto [i0, i1] = g.snap(region.lo, region.hi);
    if (i1 <= i0) i1 = std::min(i0 + 1, g.size() - 1);
    if (i1 <= i0) throw DomainError("region resolves to a single node");
    c.i0 = i0;
    c.i1 = i1;
    return c;
}

}  // namespace detail

inline double lp_norm(const RadialField& f, const RadialInterval& region, const NormSpec& norm) {
    norm.validate();
    require(norm.kind == NormKind::strong, "lp_norm: strong norm expected");
    require(f.values.size() == f.grid.size(), "lp_norm: field/grid size mismatch");
    const auto c = detail::cover(f.grid, region);
    if (norm.p == kInf) {
        double m = 0.0;
        for (std::size_t i = c.i0; i <= c.i1; ++i) m = std::max(m, std::abs(f.values[i]));
        return m;
    }
    std::vector<double> pw(f.values.size(), 0.0);
    double peak = 0.0;
    for (std::size_t i = c.i0; i <= c.i1; ++i) peak = std::max(peak, std::abs(f.values[i]));
    if (peak == 0.0) return 0.0;
    // scale by the peak so that large p does not overflow
    for (std::size_t i = c.i0; i <= c.i1; ++i) pw[i] = std::pow(std::abs(f.values[i]) / peak, norm.p);
    double s = f.grid.integrate(pw, c.i0, c.i1);
    if (c.cap) s += f.grid.origin_cap() * pw[0];
    return peak * std::pow(std::max(s, 0.0), 1.0 / norm.p);
}

// Measure of {|f| > lambda} within the covered part, with f linear in r between nodes.
inline double level_set_measure(const RadialField& f, std::size_t i0, std::size_t i1, bool cap, double lambda) {
    const int N = f.grid.dimension();
    const double w = sphere_area(N) / N;
    CompensatedSum m;
    const auto& r = f.grid.nodes();
    if (cap && std::abs(f.values[0]) > lambda) m += w * std::pow(r[0], N);
    for (std::size_t i = i0; i < i1; ++i) {
        const double a = std::abs(f.values[i]), b = std::abs(f.values[i + 1]);
        double lo = r[i], hi = r[i + 1];
        if (a > lambda && b > lambda) {
        } else if (a <= lambda && b <= lambda) {
            continue;
        } else {
            const double x = r[i] + (lambda - a) / (b - a) * (r[i + 1] - r[i]);
            if (a > lambda)
                hi = x;
            else
                lo = x;
        }
        m += w * (std::pow(hi, N) - std::pow(lo, N));
    }
    return m.value();
}

inline double weak_norm(const RadialField& f, const RadialInterval& region, double p, std::uint64_t seed = 0) {
    if (!(p >= 1.0 && p < kInf)) throw DomainError("weak_norm: p must be finite and >= 1");
    require(f.values.size() == f.grid.size(), "weak_norm: field/grid size mismatch");
    const auto c = detail::cover(f.grid, region);
    double lmin = kInf, lmax = 0.0;
    for (std::size_t i = c.i0; i <= c.i1; ++i) {
        const double v = std::abs(f.values[i]);
        if (v > 0.0) lmin = std::min(lmin, v);
        lmax = std::max(lmax, v);
    }
    if (lmax == 0.0) return 0.0;
    auto objective = [&](double lambda) {
        return lambda * std::pow(level_set_measure(f, c.i0, c.i1, c.cap, lambda), 1.0 / p);
    };
    const int sweep = 200;
    const double llo = std::log(lmin), lhi = std::log(lmax);
    const double dl = (lhi - llo) / (sweep - 1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    double best = 0.0, best_l = llo;
    for (int k = 0; k < sweep; ++k) {
        double l = llo + dl * k;
        if (seed != 0 && k > 0 && k + 1 < sweep) l += dl * jitter(rng);
        const double lambda = std::exp(l) * (1.0 - 1e-12);
        const double v = objective(lambda);
        if (v > best) {
            best = v;
            best_l = l;
        }
    }
    // the supremum is often approached from just below a sampled level
    for (std::size_t i = c.i0; i <= c.i1; ++i) {
        const double lambda = std::abs(f.values[i]) * (1.0 - 1e-12);
        if (lambda > 0.0) best = std::max(best, objective(lambda));
    }
    if (dl > 0.0) {
        // golden-section refinement around the best sweep point
        double a = best_l - dl, b = best_l + dl;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = objective(std::exp(x1)), f2 = objective(std::exp(x2));
        for (int it = 0; it < 60; ++it) {
            if (f1 > f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = objective(std::exp(x1));
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = objective(std::exp(x2));
            }
        }
        best = std::max({best, f1, f2});
    }
    return best;
}

}  // namespace fracheat
