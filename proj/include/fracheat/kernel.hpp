#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/core.hpp"
#include "fracheat/errors.hpp"
#include "fracheat/hankel.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/specfun.hpp"

namespace fracheat {

enum class ProfileMethod { direct, subordination };
enum class NearOriginLaw { power, log, constant };

inline std::string to_string(ProfileMethod m) {
    return m == ProfileMethod::direct ? "direct-inversion" : "subordination";
}

inline std::string to_string(NearOriginLaw l) {
    switch (l) {
        case NearOriginLaw::power: return "|xi|^{2s-N}";
        case NearOriginLaw::log: return "-log|xi|";
        case NearOriginLaw::constant: return "constant";
    }
    return "?";
}

// Which behavior F has at the origin. The singular laws only appear with memory (alpha < 1).
inline NearOriginLaw near_origin_law(const ModelParams& p) {
    if (p.alpha < 1.0) {
        if (2.0 * p.s < p.N) return NearOriginLaw::power;
        if (2.0 * p.s == p.N) return NearOriginLaw::log;
    }
    return NearOriginLaw::constant;
}

struct ProfileDiagnostics {
    double mass = 0.0;
    double mass_error = 0.0;
    double tail_variation = 0.0;
    double near_origin_slope = 0.0;      // power law only
    double log_ratio_variation = 0.0;    // spread of F/(-ln r) on [1e-4, 1e-3], reported only
    double worst_node_error = 0.0;       // quadrature error estimate, relative
    double worst_node_r = 0.0;
    int nonconverged_nodes = 0;
    int subtraction_terms = 0;
    int series_nodes = 0;                // nodes filled from the large-r expansion
    double build_seconds = 0.0;
    std::vector<std::string> failures;
};

struct ProfileTable {
    ModelParams params;
    RadialGrid grid;
    std::vector<double> values;
    std::vector<double> log_slopes;  // d ln F / d ln r at nodes, for interpolation
    NearOriginLaw law = NearOriginLaw::constant;
    ProfileMethod method = ProfileMethod::direct;
    std::optional<double> value_at_origin;  // F(0) for the constant law
    std::optional<double> kappa;            // near-origin constant, or F(0)
    double kappa_spread = 0.0;
    double kappa_hat = 0.0;
    double tail_variation = 0.0;
    ProfileDiagnostics diag;
};

inline RadialGrid default_profile_grid(int N) { return RadialGrid::logarithmic(N, 1e-4, 1e3, 600); }

struct ProfileOptions {
    double rel_tol = 1e-11;
    unsigned threads = 0;
};

namespace detail {

struct LineFit {
    double slope = 0.0, intercept = 0.0;
};

inline LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "line_fit: need matching samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

// Inverse transform of (1 + rho^2)^{-b} on R^N (Bessel potential kernel).
inline double bessel_potential(int N, double b, double r) {
    const double half = 0.5 * N;
    if (r == 0.0) {
        require(b > half, "bessel_potential: singular at the origin");
        return std::tgamma(b - half) / (std::pow(4.0 * std::numbers::pi, half) * std::tgamma(b));
    }
    if (r > 700.0) return 0.0;
    const double nu = std::abs(half - b);
    return std::pow(2.0, 1.0 - b) / (std::pow(2.0 * std::numbers::pi, half) * std::tgamma(b)) *
           std::pow(r, b - half) * std::cyl_bessel_k(nu, r);
}

// Large-r expansion F(r) ~ sum_k (-1)^k / Gamma(1 + alpha k) * C_N(2sk) r^{-N-2sk}, where
// C_N(a) r^{-N-a} is the inverse transform of |xi|^a. Asymptotic in general; summed to the
// smallest term. Returns nullopt if the smallest term is not negligible.
inline std::optional<double> tail_expansion(const ModelParams& p, double r, double rel_tol = 1e-13) {
    const double lr = std::log(r);
    CompensatedSum sum;
    double prev = kInf;
    for (int k = 1; k <= 400; ++k) {
        const double a = 2.0 * p.s * k;
        const double sn = sin_pi(0.5 * a);  // zero when a is an even integer
        if (sn == 0.0) continue;
        const double lmag = a * std::numbers::ln2 - 0.5 * p.N * std::log(std::numbers::pi) +
                            std::lgamma(0.5 * (p.N + a)) + std::lgamma(1.0 + 0.5 * a) -
                            std::log(std::numbers::pi) - std::lgamma(1.0 + p.alpha * k) - (p.N + a) * lr;
        const double sign = ((k % 2) ? -1.0 : 1.0) * (-sn);
        const double term = sign * std::exp(lmag);
        if (std::abs(term) > prev) break;  // divergent beyond the smallest term
        sum += term;
        prev = std::abs(term);
        if (prev <= 1e-3 * rel_tol * std::abs(sum.value())) return sum.value();
    }
    if (prev <= rel_tol * std::abs(sum.value())) return sum.value();
    return std::nullopt;
}

// Direct Fourier inversion of E_alpha(-rho^{2s}) with Bessel-potential subtraction.
class DirectInverter {
public:
    DirectInverter(const ModelParams& p, double rel_tol) : p_(p), ml_(p.alpha), tol_(rel_tol) {
        if (p.alpha < 1.0) {
            int m = 1;
            while (2.0 * p.s * m <= p.N) ++m;
            m = std::max(m, 2);
            for (int k = 1; k <= m; ++k) {
                const double ak = ((k % 2) ? 1.0 : -1.0) * rgamma(1.0 - p.alpha * k);
                coef_.push_back(ak);
            }
        }
    }

    int subtraction_terms() const { return int(coef_.size()); }

    double amplitude(double rho) const {
        double v = ml_(std::pow(rho, 2.0 * p_.s));
        if (!coef_.empty()) {
            const double q = 1.0 / (1.0 + rho * rho);
            for (std::size_t k = 0; k < coef_.size(); ++k)
                if (coef_[k] != 0.0) v -= coef_[k] * std::pow(q, p_.s * double(k + 1));
        }
        return v;
    }

    HankelResult operator()(double r) const {
        double add = 0.0;
        for (std::size_t k = 0; k < coef_.size(); ++k)
            if (coef_[k] != 0.0) add += coef_[k] * bessel_potential(p_.N, p_.s * double(k + 1), r);
        HankelOptions opt;
        opt.rel_tol = tol_;
        opt.abs_tol = 0.1 * tol_ * std::abs(add);  // accuracy is judged against the full F(r)
        auto amp = [this](double rho) { return amplitude(rho); };
        HankelResult h = radial_inverse_transform(p_.N, r, amp, opt);
        h.value += add;
        return h;
    }

private:
    ModelParams p_;
    MittagLeffler ml_;
    double tol_;
    std::vector<double> coef_;
};

inline std::vector<double> hermite_log_slopes(const RadialGrid& g, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> y(n), m(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::log(v[i]);
    const double h = g.step();
    for (std::size_t i = 0; i < n; ++i) {
        if (n < 5) {
            const std::size_t a = (i == 0) ? 0 : i - 1, b = std::min(n - 1, i + 1);
            m[i] = (y[b] - y[a]) / (h * double(b - a));
        } else if (i >= 2 && i + 2 < n) {
            m[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
        } else if (i < 2) {
            const std::size_t j = i;  // one-sided fourth order
            if (j == 0)
                m[i] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h);
            else
                m[i] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h);
        } else {
            const std::size_t k = n - 1;
            if (i == k)
                m[i] = (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] + 3.0 * y[k - 4]) / (12.0 * h);
            else
                m[i] = (3.0 * y[k] + 10.0 * y[k - 1] - 18.0 * y[k - 2] + 6.0 * y[k - 3] - y[k - 4]) / (12.0 * h);
        }
    }
    // Fritsch-Carlson limiter keeps each cell monotone when the data are
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = (y[i + 1] - y[i]) / h;
        if (d == 0.0) {
            m[i] = m[i + 1] = 0.0;
            continue;
        }
        double a = m[i] / d, b = m[i + 1] / d;
        if (a < 0.0) m[i] = a = 0.0;
        if (b < 0.0) m[i + 1] = b = 0.0;
        const double t = a * a + b * b;
        if (t > 9.0) {
            const double c = 3.0 / std::sqrt(t);
            m[i] = c * a * d;
            m[i + 1] = c * b * d;
        }
    }
    return m;
}

inline std::vector<std::size_t> nodes_in(const RadialGrid& g, double a, double b) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.node(i) >= a * (1.0 - 1e-12) && g.node(i) <= b * (1.0 + 1e-12)) idx.push_back(i);
    return idx;
}

}  // namespace detail

// F at radius r: Hermite interpolation of (ln r, ln F) on the grid, the near-origin law below it,
// and kappa_hat r^{-(N+2s)} above it.
inline double profile_value(const ProfileTable& t, double r) {
    if (!(r >= 0.0)) throw DomainError("profile_value: r must be nonnegative");
    const auto& nodes = t.grid.nodes();
    const double N = t.params.N, s2 = 2.0 * t.params.s;
    if (r > nodes.back()) return t.kappa_hat * std::pow(r, -(N + s2));
    if (r < nodes.front()) {
        const double r0 = nodes.front(), f0 = t.values.front();
        switch (t.law) {
            case NearOriginLaw::power:
                if (r == 0.0) throw DomainError("profile_value: r=0 requested for a singular profile");
                return f0 * std::pow(r / r0, s2 - N);
            case NearOriginLaw::log:
                if (r == 0.0) throw DomainError("profile_value: r=0 requested for a singular profile");
                return f0 + t.kappa.value_or(0.0) * std::log(r0 / r);
            case NearOriginLaw::constant: {
                const double F0 = t.value_at_origin.value_or(f0);
                if (r == 0.0) return F0;
                const double gamma = (t.params.alpha < 1.0) ? s2 - N : 2.0;
                return F0 + (f0 - F0) * std::pow(r / r0, gamma);
            }
        }
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    std::size_t i = std::size_t(it - nodes.begin()) - 1;
    if (nodes[i] == r) return t.values[i];
    if (i + 1 >= nodes.size()) return t.values.back();
    const double h = std::log(nodes[i + 1]) - std::log(nodes[i]);
    const double x = (std::log(r) - std::log(nodes[i])) / h;
    const double y0 = std::log(t.values[i]), y1 = std::log(t.values[i + 1]);
    const double m0 = t.log_slopes[i] * h, m1 = t.log_slopes[i + 1] * h;
    const double x2 = x * x, x3 = x2 * x;
    const double y = (2 * x3 - 3 * x2 + 1) * y0 + (x3 - 2 * x2 + x) * m0 + (-2 * x3 + 3 * x2) * y1 + (x3 - x2) * m1;
    return std::exp(y);
}

// Z(x, t) = t^{-alpha N / 2s} F(|x| t^{-alpha / 2s}).
inline double kernel_value(const ProfileTable& t, double x_radius, double time) {
    if (!(time > 0.0)) throw DomainError("kernel_value: t must be positive");
    const double a = t.params.scale_exponent();
    return std::pow(time, -a * t.params.N) * profile_value(t, x_radius * std::pow(time, -a));
}

// int F over R^N: Gregory sum over the grid, the near-origin law on the inner ball and the
// kappa_hat tail beyond the last node.
inline double profile_mass(const ProfileTable& t) {
    const double N = t.params.N, s2 = 2.0 * t.params.s, w = sphere_area(t.params.N);
    const double r0 = t.grid.front(), r1 = t.grid.back(), f0 = t.values.front();
    double cap = 0.0;
    switch (t.law) {
        case NearOriginLaw::power: cap = w * f0 * std::pow(r0, N) / s2; break;
        case NearOriginLaw::log:
            cap = w * (f0 * std::pow(r0, N) / N + t.kappa.value_or(0.0) * std::pow(r0, N) / (N * N));
            break;
        case NearOriginLaw::constant: {
            const double F0 = t.value_at_origin.value_or(f0);
            const double gamma = (t.params.alpha < 1.0) ? s2 - N : 2.0;
            cap = w * (F0 * std::pow(r0, N) / N + (f0 - F0) * std::pow(r0, N) / (N + gamma));
            break;
        }
    }
    const double tail = w * t.kappa_hat * std::pow(r1, -s2) / s2;
    return t.grid.integrate(t.values) + cap + tail;
}

struct KappaEstimate {
    double value = 0.0;
    double spread = 0.0;  // relative spread across the smallest decades
    NearOriginLaw law = NearOriginLaw::constant;
};

namespace detail {

inline KappaEstimate fit_kappa(const ProfileTable& t) {
    KappaEstimate k;
    k.law = t.law;
    const double r0 = t.grid.front();
    const double N = t.params.N, s2 = 2.0 * t.params.s;
    auto at = [&](double r) {
        auto idx = nodes_in(t.grid, r, r);
        if (idx.empty()) {
            const auto it = std::lower_bound(t.grid.nodes().begin(), t.grid.nodes().end(), r);
            return std::size_t(std::min<std::ptrdiff_t>(it - t.grid.nodes().begin(), t.grid.size() - 1));
        }
        return idx.front();
    };
    switch (t.law) {
        case NearOriginLaw::power: {
            double v[3];
            for (int d = 0; d < 3; ++d) {
                const std::size_t i = at(r0 * std::pow(10.0, d));
                v[d] = t.values[i] * std::pow(t.grid.node(i), N - s2);
            }
            const double d1 = v[1] - v[0], d2 = v[2] - v[1];
            k.value = v[0];
            // Aitken step toward r -> 0 when the decade differences shrink geometrically
            if (d2 != 0.0) {
                const double q = d1 / d2;
                if (q > 0.0 && q < 1.0) k.value = v[0] - d1 * q / (1.0 - q);
            }
            const double lo = std::min({v[0], v[1], v[2]}), hi = std::max({v[0], v[1], v[2]});
            k.spread = (hi - lo) / std::abs(k.value);
            break;
        }
        case NearOriginLaw::log: {
            // F = kappa (-ln r) + c + o(1): the slope against -ln r over the two smallest decades
            double sl[2];
            for (int d = 0; d < 2; ++d) {
                const double a = r0 * std::pow(10.0, d);
                auto idx = nodes_in(t.grid, a, 10.0 * a);
                std::vector<double> x, y;
                for (auto i : idx) {
                    x.push_back(-std::log(t.grid.node(i)));
                    y.push_back(t.values[i]);
                }
                sl[d] = line_fit(x, y).slope;
            }
            k.value = sl[0];
            k.spread = std::abs(sl[1] - sl[0]) / std::abs(k.value);
            break;
        }
        case NearOriginLaw::constant: {
            k.value = t.value_at_origin.value_or(t.values.front());
            // two-node extrapolation with the known exponent
            const double gamma = (t.params.alpha < 1.0) ? s2 - N : 2.0;
            const double ra = t.grid.node(0), rb = t.grid.node(1);
            const double fa = t.values[0], fb = t.values[1];
            const double ga = std::pow(ra, gamma), gb = std::pow(rb, gamma);
            const double F0 = (fa * gb - fb * ga) / (gb - ga);
            k.spread = std::abs(F0 - k.value) / std::abs(k.value);
            break;
        }
    }
    return k;
}

inline double tail_plateau_variation(const ProfileTable& t, double* plateau = nullptr) {
    const double e = t.params.N + 2.0 * t.params.s;
    auto idx = nodes_in(t.grid, t.grid.back() / 10.0, t.grid.back());
    double lo = kInf, hi = -kInf;
    for (auto i : idx) {
        const double v = std::pow(t.grid.node(i), e) * t.values[i];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double last = std::pow(t.grid.back(), e) * t.values.back();
    if (plateau) *plateau = last;
    return (hi - lo) / last;
}

// Fills the law-dependent fields, mass and invariant checks.
inline void finish_table(ProfileTable& t) {
    auto& d = t.diag;
    const double N = t.params.N, s2 = 2.0 * t.params.s;
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        if (!(t.values[i] > 0.0) || !std::isfinite(t.values[i])) {
            std::ostringstream os;
            os << "nonpositive profile value " << t.values[i] << " at r=" << t.grid.node(i);
            d.failures.push_back(os.str());
            return;
        }
    }
    t.log_slopes = hermite_log_slopes(t.grid, t.values);
    t.tail_variation = tail_plateau_variation(t, &t.kappa_hat);
    d.tail_variation = t.tail_variation;
    if (t.law == NearOriginLaw::log) {
        // provisional kappa for the cap integral
        auto idx = nodes_in(t.grid, t.grid.front(), 10.0 * t.grid.front());
        std::vector<double> x, y;
        for (auto i : idx) {
            x.push_back(-std::log(t.grid.node(i)));
            y.push_back(t.values[i]);
        }
        t.kappa = line_fit(x, y).slope;
    }
    if (t.grid.front() <= 1.0001e-4 && t.grid.back() >= 1e-2) {
        auto idx = nodes_in(t.grid, 1e-4, 1e-2);
        std::vector<double> x, y;
        for (auto i : idx) {
            x.push_back(std::log(t.grid.node(i)));
            y.push_back(std::log(t.values[i]));
        }
        d.near_origin_slope = line_fit(x, y).slope;
        auto idx3 = nodes_in(t.grid, 1e-4, 1e-3);
        double lo = kInf, hi = -kInf;
        for (auto i : idx3) {
            const double q = t.values[i] / -std::log(t.grid.node(i));
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        d.log_ratio_variation = (hi - lo) / lo;
    }
    if (t.law == NearOriginLaw::power) {
        t.kappa = fit_kappa(t).value;
    } else if (t.law == NearOriginLaw::constant && s2 > N && t.value_at_origin) {
        t.kappa = *t.value_at_origin;
    }
    if (t.kappa) t.kappa_spread = fit_kappa(t).spread;
    d.mass = profile_mass(t);
    d.mass_error = std::abs(d.mass - 1.0);

    std::ostringstream os;
    if (d.mass_error > 1e-6) {
        os << "mass " << d.mass << " differs from 1 by " << d.mass_error;
        d.failures.push_back(os.str());
        os.str("");
    }
    if (t.tail_variation > 0.02) {
        os << "tail plateau varies by " << t.tail_variation << " over the last decade";
        d.failures.push_back(os.str());
        os.str("");
    }
    if (t.law == NearOriginLaw::power && d.near_origin_slope != 0.0 &&
        std::abs(d.near_origin_slope - (s2 - N)) > 0.03 * std::abs(s2 - N)) {
        os << "near-origin slope " << d.near_origin_slope << " differs from " << (s2 - N);
        d.failures.push_back(os.str());
        os.str("");
    }
    if (t.law == NearOriginLaw::log && t.kappa_spread > 0.05) {
        os << "-log r coefficient not stable across the smallest decades (spread " << t.kappa_spread << ")";
        d.failures.push_back(os.str());
        os.str("");
    }
    if (t.law == NearOriginLaw::constant && t.value_at_origin && !(std::isfinite(*t.value_at_origin) && *t.value_at_origin > 0.0))
        d.failures.push_back("F(0) not finite and positive");
    if (d.nonconverged_nodes > 0) {
        os << d.nonconverged_nodes << " nodes did not converge; worst at r=" << d.worst_node_r
           << " (relative error " << d.worst_node_error << ")";
        d.failures.push_back(os.str());
    }
}

inline void record_node(ProfileDiagnostics& d, double r, const HankelResult& h) {
    double rel = std::abs(h.value) > 0.0 ? h.error / std::abs(h.value) : h.error;
    if (!h.converged) {
        ++d.nonconverged_nodes;
        rel = std::max(rel, 1.0);  // unconverged nodes rank above any converged one
    }
    if (rel > d.worst_node_error) {
        d.worst_node_error = rel;
        d.worst_node_r = r;
    }
}

// Closed-form alpha = 1, s = 1/2 profile (Poisson kernel) on R^N.
inline double poisson_profile(int N, double r) {
    const double h = 0.5 * (N + 1);
    return std::tgamma(h) / std::pow(std::numbers::pi, h) * std::pow(1.0 + r * r, -h);
}

inline ProfileTable build_direct(const ModelParams& p, const RadialGrid& grid, const ProfileOptions& opt) {
    ProfileTable t;
    t.params = p;
    t.grid = grid;
    t.law = near_origin_law(p);
    t.method = ProfileMethod::direct;
    DirectInverter inv(p, opt.rel_tol);
    t.diag.subtraction_terms = inv.subtraction_terms();
    const std::size_t n = grid.size();
    t.values.assign(n, 0.0);
    std::vector<HankelResult> res(n);
    std::vector<char> from_series(n, 0);
    parallel_for(
        n,
        [&](std::size_t i) {
            const double r = grid.node(i);
            if (r >= 20.0) {
                if (auto v = tail_expansion(p, r)) {
                    res[i].value = *v;
                    res[i].converged = true;
                    from_series[i] = 1;
                    return;
                }
            }
            res[i] = inv(r);
        },
        opt.threads);
    for (std::size_t i = 0; i < n; ++i) {
        t.values[i] = res[i].value;
        t.diag.series_nodes += from_series[i];
        record_node(t.diag, grid.node(i), res[i]);
    }
    if (t.law == NearOriginLaw::constant) {
        const HankelResult h0 = inv(0.0);
        record_node(t.diag, 0.0, h0);
        t.value_at_origin = h0.value;
    }
    return t;
}

// Fixed quadrature in u = ln tau for F(r) = int M_alpha(tau) tau^{-N/2s} G(r tau^{-1/2s}) dtau.
class Subordinator {
public:
    Subordinator(const ModelParams& p, double r_min, std::function<double(double)> G, double G0)
        : p_(p), G_(std::move(G)), G0_(G0) {
        const double a = p.alpha;
        const double tmax = wright_mainardi_tau_max(a);
        const double u_hi = std::log(tmax);
        u_lo_ = 2.0 * p.s * std::log(r_min) - 18.0;
        const auto& g = gauss_legendre(20);
        auto add_panels = [&](double lo, double hi, double width) {
            const int k = std::max(1, int(std::ceil((hi - lo) / width)));
            for (int j = 0; j < k; ++j) {
                const double A = lo + (hi - lo) * j / k, B = lo + (hi - lo) * (j + 1) / k;
                const double c = 0.5 * (A + B), h = 0.5 * (B - A);
                for (int q = 0; q < 20; ++q) {
                    u_.push_back(c + h * g.nodes[q]);
                    w_.push_back(h * g.weights[q]);
                }
            }
        };
        add_panels(u_lo_, 0.0, 0.25);
        add_panels(0.0, u_hi, 0.05);
        const double e = 1.0 - p.N / (2.0 * p.s);
        m_.resize(u_.size());
        for (std::size_t i = 0; i < u_.size(); ++i) {
            const double tau = std::exp(u_[i]);
            const double M = (a == 0.5) ? std::exp(-0.25 * tau * tau) / std::sqrt(std::numbers::pi)
                                        : wright_mainardi(a, tau);
            m_[i] = w_[i] * M * std::exp(u_[i] * e);
        }
        M0_ = rgamma(1.0 - a);
    }

    double operator()(double r) const {
        CompensatedSum s;
        const double inv2s = 1.0 / (2.0 * p_.s);
        for (std::size_t i = 0; i < u_.size(); ++i) s += m_[i] * G_(r * std::exp(-u_[i] * inv2s));
        if (r == 0.0) {
            // tau below e^{u_lo}: M ~ M(0), integrand M(0) G(0) tau^{-N/2s}
            const double e = 1.0 - p_.N * inv2s;
            s += M0_ * G0_ * std::exp(u_lo_ * e) / e;
        }
        return s.value();
    }

private:
    ModelParams p_;
    std::function<double(double)> G_;
    double G0_;
    double M0_ = 0.0;
    double u_lo_ = 0.0;
    std::vector<double> u_, w_, m_;
};

}  // namespace detail

// Table plus diagnostics; invariant failures are listed rather than thrown.
inline ProfileTable build_profile_unchecked(const ModelParams& p, const RadialGrid& grid,
                                           ProfileMethod method = ProfileMethod::direct,
                                           const ProfileOptions& opt = {}) {
    p.validate();
    require(p.N >= 1 && p.N <= 3, "build_profile: N must be 1, 2 or 3");
    require(p.s < 1.0, "build_profile: s must be below 1 (no algebraic tail at s=1)");
    require(grid.dimension() == p.N, "build_profile: grid dimension differs from N");
    require(grid.spacing() == Spacing::logarithmic, "build_profile: profile grids are logarithmic");
    require(grid.size() >= 20, "build_profile: grid too coarse");
    const auto start = std::chrono::steady_clock::now();
    ProfileTable t;
    if (method == ProfileMethod::direct || p.alpha == 1.0) {
        t = detail::build_direct(p, grid, opt);
        t.method = method;
    } else {
        // alpha = 1 profile G for the same (s, N), closed form at s = 1/2
        std::function<double(double)> G;
        double G0 = 0.0;
        std::shared_ptr<ProfileTable> base;
        if (p.s == 0.5) {
            const int N = p.N;
            G = [N](double r) { return detail::poisson_profile(N, r); };
            G0 = detail::poisson_profile(N, 0.0);
        } else {
            ModelParams q = p;
            q.alpha = 1.0;
            base = std::make_shared<ProfileTable>(
                detail::build_direct(q, RadialGrid::logarithmic(p.N, 1e-6, 1e6, 1200), opt));
            detail::finish_table(*base);
            G = [base](double r) { return profile_value(*base, r); };
            G0 = *base->value_at_origin;
        }
        detail::Subordinator sub(p, grid.front(), G, G0);
        t.params = p;
        t.grid = grid;
        t.law = near_origin_law(p);
        t.method = ProfileMethod::subordination;
        t.values.assign(grid.size(), 0.0);
        parallel_for(grid.size(), [&](std::size_t i) { t.values[i] = sub(grid.node(i)); }, opt.threads);
        if (t.law == NearOriginLaw::constant) t.value_at_origin = sub(0.0);
    }
    detail::finish_table(t);
    t.diag.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

inline ProfileTable build_profile(const ModelParams& p, const RadialGrid& grid,
                                  ProfileMethod method = ProfileMethod::direct, const ProfileOptions& opt = {}) {
    ProfileTable t = build_profile_unchecked(p, grid, method, opt);
    if (!t.diag.failures.empty()) {
        std::string msg = "build_profile(" + describe(p) + "): ";
        for (std::size_t i = 0; i < t.diag.failures.size(); ++i) msg += (i ? "; " : "") + t.diag.failures[i];
        throw NumericalError(msg);
    }
    return t;
}

inline ProfileTable build_profile(const ModelParams& p, ProfileMethod method = ProfileMethod::direct) {
    return build_profile(p, default_profile_grid(p.N), method);
}

// Near-origin constant: kappa for 2s < N (decade extrapolation of F r^{N-2s}), the -log r
// coefficient for 2s = N, or F(0) for 2s > N.
inline KappaEstimate estimate_kappa(const ProfileTable& t) {
    const auto& p = t.params;
    if (p.alpha == 1.0 && 2.0 * p.s <= p.N) throw DomainError("kappa-limit undefined at alpha=1");
    KappaEstimate k = detail::fit_kappa(t);
    if (k.law == NearOriginLaw::constant && t.value_at_origin) k.value = *t.value_at_origin;
    if (k.spread > 0.05) {
        std::ostringstream os;
        os << "estimate_kappa: non-stabilizing limit (spread " << k.spread << ")";
        throw NumericalError(os.str());
    }
    return k;
}

struct KappaHatEstimate {
    double value = 0.0;
    double variation = 0.0;
};

inline KappaHatEstimate estimate_kappa_hat(const ProfileTable& t) {
    require(t.grid.back() / t.grid.front() >= 10.0, "estimate_kappa_hat: table lacks a tail decade");
    KappaHatEstimate k;
    k.variation = detail::tail_plateau_variation(t, &k.value);
    if (k.variation > 0.02) {
        std::ostringstream os;
        os << "estimate_kappa_hat: plateau varies by " << k.variation;
        throw NumericalError(os.str());
    }
    return k;
}

struct GradientReport {
    double tail_exponent = 0.0;         // fitted on the last grid decade
    double tail_constant_max = 0.0;     // max |F'(r)| r^{N+2s+1} over r >= 1
    double near_origin_exponent = 0.0;  // fitted on [r_min, 100 r_min]
    double near_origin_max = 0.0;       // max |F'| over [r_min, 100 r_min]
    bool bounded_near_origin = false;   // fitted near-origin exponent >= 0 (up to fit noise)
};

inline GradientReport check_gradient_bounds(const ProfileTable& t) {
    const auto& g = t.grid;
    require(g.size() >= 20, "check_gradient_bounds: grid too coarse");
    const double e = t.params.N + 2.0 * t.params.s + 1.0;
    std::vector<double> dF(g.size(), 0.0);
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
        dF[i] = (t.values[i + 1] - t.values[i - 1]) / (g.node(i + 1) - g.node(i - 1));
    GradientReport rep;
    auto fit = [&](double a, double b) {
        std::vector<double> x, y;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double r = g.node(i);
            if (r < a * (1 - 1e-12) || r > b * (1 + 1e-12) || dF[i] == 0.0) continue;
            x.push_back(std::log(r));
            y.push_back(std::log(std::abs(dF[i])));
        }
        return detail::line_fit(x, y).slope;
    };
    rep.tail_exponent = fit(g.back() / 10.0, g.back());
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double r = g.node(i);
        if (r >= 1.0) rep.tail_constant_max = std::max(rep.tail_constant_max, std::abs(dF[i]) * std::pow(r, e));
        if (r <= 100.0 * g.front()) rep.near_origin_max = std::max(rep.near_origin_max, std::abs(dF[i]));
    }
    rep.near_origin_exponent = fit(g.front(), 100.0 * g.front());
    rep.bounded_near_origin = rep.near_origin_exponent >= -0.02;
    return rep;
}

}  // namespace fracheat
