#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "fracheat/errors.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

// sin(pi x) with exact zeros at integers.
inline double sin_pi(double x) {
    const double r = std::remainder(x, 2.0);  // in [-1, 1]
    if (r == 0.0 || std::abs(r) == 1.0) return 0.0;
    return std::sin(std::numbers::pi * r);
}

// 1/Gamma(x), zero at the poles.
inline double rgamma(double x) {
    if (x <= 0.0 && std::abs(x - std::nearbyint(x)) < 1e-13) return 0.0;
    if (x < 0.5) {
        // 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
        const double y = 1.0 - x;
        if (y > 171.0) {
            const double lg = std::lgamma(y);
            return std::exp(lg) * sin_pi(x) / std::numbers::pi;
        }
        return std::tgamma(y) * sin_pi(x) / std::numbers::pi;
    }
    if (x > 171.6) return 0.0;
    return 1.0 / std::tgamma(x);
}

struct MLEvalPolicy {
    double series_threshold = 1.0;
    double asymptotic_threshold = 30.0;
    double accuracy = 1e-10;
    int asymptotic_terms = 40;

    void validate() const {
        require(series_threshold > 0.0 && asymptotic_threshold > series_threshold,
                "MLEvalPolicy: need 0 < series threshold < asymptotic threshold");
        require(accuracy > 0.0 && accuracy <= 1e-6, "MLEvalPolicy: accuracy must lie in (0, 1e-6]");
        require(asymptotic_terms >= 1, "MLEvalPolicy: asymptotic term count must be positive");
    }
};

namespace detail {

inline void check_ml_args(double alpha, double x) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("mittag_leffler: alpha must lie in (0,1]");
    if (!(x >= 0.0)) throw DomainError("mittag_leffler: x must be nonnegative");
}

// Power series sum_k (-x)^k / Gamma(1 + alpha k) (deriv: d/dx of it).
// Returns NaN when the series fails to settle.
inline double ml_series(double alpha, double x, bool deriv) {
    CompensatedSum s;
    double xp = 1.0;  // x^k (or x^(k-1) for the derivative)
    double last = 0.0;
    int small = 0;
    for (int k = deriv ? 1 : 0; k < 2000; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const double coef = deriv ? k * rgamma(1.0 + alpha * k) : rgamma(1.0 + alpha * k);
        const double term = sign * coef * xp;
        s += term;
        last = std::abs(term);
        if (last <= 1e-18 * std::abs(s.value())) {
            if (++small >= 2) return s.value();
        } else {
            small = 0;
        }
        xp *= x;
        if (xp == 0.0) return s.value();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// E_alpha(-x) = sin(a pi)/(a pi) int_0^inf exp(-v^{1/a}) x / (v^2 + 2 v x cos(a pi) + x^2) dv
inline double ml_integral(double alpha, double x, bool deriv, double rel_tol) {
    const double ch = std::cos(0.5 * alpha * std::numbers::pi);
    const double c4 = 4.0 * ch * ch;  // 2 (1 + cos(a pi)), free of cancellation near a = 1
    const double pref = std::sin(alpha * std::numbers::pi) / (alpha * std::numbers::pi);
    const double inv_a = 1.0 / alpha;
    auto f = [&](double v) {
        const double d = (v - x) * (v - x) + c4 * v * x;
        const double e = std::exp(-std::pow(v, inv_a));
        return deriv ? e * (v * v - x * x) / (d * d) : e * x / d;
    };
    const double vmax = std::pow(745.0, alpha);
    std::vector<double> pts = {0.0, std::min(1.0, vmax), vmax};
    if (x < vmax) {
        // the rational factor peaks near v = x with width ~ x |1 + cos(a pi)|^{1/2}
        const double w = x * std::sqrt(std::max(c4, 1e-300));
        pts.push_back(x);
        if (x - w > 0.0) pts.push_back(x - w);
        if (x + w < vmax) pts.push_back(x + w);
        if (x - 8.0 * w > 0.0) pts.push_back(x - 8.0 * w);
        if (x + 8.0 * w < vmax) pts.push_back(x + 8.0 * w);
    }
    auto r = integrate_piecewise(f, pts, rel_tol * 0.1, 0.0);
    if (!r.converged && r.error > 10.0 * rel_tol * std::abs(r.value))
        throw NumericalError("mittag_leffler: integral representation did not converge");
    return pref * r.value;
}

// Asymptotic series sum_{m>=1} (-1)^{m+1} x^{-m} / Gamma(1 - alpha m); NaN if not converged.
inline double ml_asymptotic(double alpha, double x, bool deriv, int terms, double rel_tol) {
    CompensatedSum s;
    double prev_mag = std::numeric_limits<double>::infinity();
    double last = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= terms; ++m) {
        const double am = alpha * m;
        if (std::abs(am - std::nearbyint(am)) < 1e-12) continue;  // pole of Gamma(1 - alpha m)
        const double rg = rgamma(1.0 - am);
        const double sign = (m % 2 == 1) ? 1.0 : -1.0;
        const double term = deriv ? -sign * m * rg * std::pow(x, -m - 1.0) : sign * rg * std::pow(x, -double(m));
        const double mag = std::abs(term);
        if (mag > prev_mag && mag > rel_tol * std::abs(s.value())) break;  // divergence starts
        s += term;
        prev_mag = mag;
        last = mag;
        if (mag <= 1e-3 * rel_tol * std::abs(s.value())) break;
    }
    const double v = s.value();
    if (!(last <= rel_tol * std::abs(v))) return std::numeric_limits<double>::quiet_NaN();
    // exponentially small contribution that the algebraic series misses (alpha near 1)
    const double expo = std::cos(std::numbers::pi / alpha) * std::pow(x, 1.0 / alpha);
    if (std::exp(expo) > 1e-2 * rel_tol * std::abs(v)) return std::numeric_limits<double>::quiet_NaN();
    return v;
}

inline double ml_eval(double alpha, double x, bool deriv, const MLEvalPolicy& pol) {
    check_ml_args(alpha, x);
    if (alpha == 1.0) return deriv ? -std::exp(-x) : std::exp(-x);
    if (x == 0.0) return deriv ? -rgamma(1.0 + alpha) : 1.0;
    if (x <= pol.series_threshold) {
        const double v = ml_series(alpha, x, deriv);
        if (std::isfinite(v)) return v;
    }
    if (x >= pol.asymptotic_threshold) {
        const double v = ml_asymptotic(alpha, x, deriv, pol.asymptotic_terms, pol.accuracy);
        if (std::isfinite(v)) return v;
    }
    return ml_integral(alpha, x, deriv, pol.accuracy);
}

}  // namespace detail

// E_alpha(-x) for alpha in (0,1], x >= 0.
inline double mittag_leffler(double alpha, double x, const MLEvalPolicy& pol = {}) {
    return detail::ml_eval(alpha, x, false, pol);
}

// d/dx E_alpha(-x).
inline double mittag_leffler_deriv(double alpha, double x, const MLEvalPolicy& pol = {}) {
    return detail::ml_eval(alpha, x, true, pol);
}

// Tabulated evaluator of E_alpha(-x) for one alpha. The middle range is covered by
// Chebyshev patches in log x fitted to the integral representation at construction.
class MittagLeffler {
public:
    explicit MittagLeffler(double alpha, MLEvalPolicy pol = {}) : alpha_(alpha), pol_(pol) {
        pol_.validate();
        detail::check_ml_args(alpha, 0.0);
        if (alpha_ == 1.0) return;
        series_.resize(200);
        for (int k = 0; k < 200; ++k) series_[k] = ((k % 2) ? -1.0 : 1.0) * rgamma(1.0 + alpha_ * k);
        for (int m = 1; m <= pol_.asymptotic_terms; ++m) {
            const double am = alpha_ * m;
            double c = 0.0;
            if (std::abs(am - std::nearbyint(am)) >= 1e-12) c = ((m % 2) ? 1.0 : -1.0) * rgamma(1.0 - am);
            asym_.push_back(c);
        }
        // upper end of the table: asymptotic series is accurate and exponential remainder negligible
        hi_ = pol_.asymptotic_threshold;
        for (int iter = 0; iter < 200; ++iter) {
            const double v = detail::ml_asymptotic(alpha_, hi_, false, pol_.asymptotic_terms, 1e-3 * pol_.accuracy);
            if (std::isfinite(v)) break;
            hi_ *= 1.25;
        }
        lo_ = pol_.series_threshold;
        const double llo = std::log(lo_), lhi = std::log(hi_);
        const int patches = std::max(8, int(std::ceil((lhi - llo) / 0.25)));
        edges_.resize(patches + 1);
        for (int i = 0; i <= patches; ++i) edges_[i] = llo + (lhi - llo) * i / patches;
        coef_.resize(patches);
        for (int i = 0; i < patches; ++i) coef_[i] = fit_patch(edges_[i], edges_[i + 1]);
    }

    double alpha() const { return alpha_; }

    double operator()(double x) const {
        if (alpha_ == 1.0) return std::exp(-x);
        if (!(x >= 0.0)) throw DomainError("mittag_leffler: x must be nonnegative");
        if (x <= lo_) {
            // Horner on the precomputed alternating coefficients
            if (x <= 0.5) {
                double s = 0.0;
                int n = 0;
                double xp = 1.0;
                while (n < 199 && xp > 1e-18) {
                    xp *= x;
                    ++n;
                }
                for (int k = n; k >= 0; --k) s = s * x + series_[k];
                return s;
            }
            return detail::ml_series(alpha_, x, false);
        }
        if (x >= hi_) {
            const double inv = 1.0 / x;
            double s = 0.0;
            for (int m = int(asym_.size()); m >= 1; --m) s = (s + asym_[m - 1]) * inv;
            return s;
        }
        const double lx = std::log(x);
        const double step = edges_[1] - edges_[0];
        std::size_t i = std::min<std::size_t>(coef_.size() - 1, std::size_t((lx - edges_[0]) / step));
        const double a = edges_[i], b = edges_[i + 1];
        const double u = (2.0 * lx - a - b) / (b - a);
        return clenshaw(coef_[i], u);
    }

private:
    static constexpr int kDeg = 16;

    static double clenshaw(const std::vector<double>& c, double u) {
        double b1 = 0.0, b2 = 0.0;
        for (int k = int(c.size()) - 1; k >= 1; --k) {
            const double b0 = 2.0 * u * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        return u * b1 - b2 + 0.5 * c[0];
    }

    std::vector<double> fit_patch(double a, double b) const {
        const int n = kDeg + 1;
        std::vector<double> f(n), c(n);
        for (int j = 0; j < n; ++j) {
            const double th = std::numbers::pi * (j + 0.5) / n;
            const double lx = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(th);
            f[j] = detail::ml_integral(alpha_, std::exp(lx), false, 1e-12);
        }
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += f[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
            c[k] = 2.0 * s / n;
        }
        return c;
    }

    double alpha_;
    MLEvalPolicy pol_;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> series_;
    std::vector<double> asym_;
    std::vector<double> edges_;
    std::vector<std::vector<double>> coef_;
};

// Largest tau at which M_alpha is above the double underflow range.
inline double wright_mainardi_tau_max(double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "wright_mainardi: alpha must lie in (0,1)");
    const double c = (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));
    return std::pow(700.0 / c, 1.0 - alpha);
}

namespace detail {

inline double wright_series(double alpha, double tau) {
    CompensatedSum s;
    double lt = (tau > 0.0) ? std::log(tau) : 0.0;
    int small = 0;
    for (int k = 0; k < 400; ++k) {
        const double rg = rgamma(1.0 - alpha - alpha * k);
        double term;
        if (k == 0) {
            term = rg;
        } else {
            if (tau == 0.0) break;
            if (rg == 0.0) continue;
            term = std::exp(k * lt - std::lgamma(k + 1.0)) * rg * ((k % 2) ? -1.0 : 1.0);
        }
        s += term;
        if (std::abs(term) < 1e-18 * std::abs(s.value()) && k > 2) {
            if (++small >= 3) break;
        } else {
            small = 0;
        }
    }
    return s.value();
}

// Integral representation valid for all tau > 0:
// M(tau) = tau^{a/(1-a)} / (pi (1-a)) int_0^pi A(phi) exp(-tau^{1/(1-a)} A(phi)) dphi.
inline double wright_integral(double alpha, double tau) {
    const double q = 1.0 / (1.0 - alpha);
    const double T = std::pow(tau, q);
    auto A = [&](double phi) {
        return std::pow(std::sin(alpha * phi), alpha * q) * std::sin((1.0 - alpha) * phi) /
               std::pow(std::sin(phi), q);
    };
    auto f = [&](double phi) {
        if (phi <= 0.0) {
            const double a0 = (1.0 - alpha) * std::pow(alpha, alpha * q);
            return a0 * std::exp(-T * a0);
        }
        if (phi >= std::numbers::pi) return 0.0;
        const double a = A(phi);
        return a * std::exp(-T * a);
    };
    auto r = integrate_adaptive(f, 0.0, std::numbers::pi, 1e-13, 0.0, 4000);
    return std::pow(tau, alpha * q) * q / std::numbers::pi * r.value;
}

}  // namespace detail

// Wright-Mainardi density M_alpha(tau). Series for small tau, integral representation beyond.
inline double wright_mainardi(double alpha, double tau) {
    require(alpha > 0.0 && alpha < 1.0, "wright_mainardi: alpha must lie in (0,1)");
    require(tau >= 0.0, "wright_mainardi: tau must be nonnegative");
    const double tmax = wright_mainardi_tau_max(alpha);
    if (tau > tmax)
        throw DomainError("wright_mainardi: tau beyond reliable range (tau_max = " + std::to_string(tmax) + ")");
    if (tau <= 1.0) return detail::wright_series(alpha, tau);
    return detail::wright_integral(alpha, tau);
}

// Bessel J of order -1/2, 0, 1/2.
inline double bessel_j(double order, double x) {
    require(x >= 0.0, "bessel_j: x must be nonnegative");
    if (order == -0.5) {
        if (x == 0.0) return std::numeric_limits<double>::infinity();
        return std::sqrt(2.0 / (std::numbers::pi * x)) * std::cos(x);
    }
    if (order == 0.5) {
        if (x == 0.0) return 0.0;
        return std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
    }
    if (order != 0.0) throw DomainError("bessel_j: unsupported order (supported: -1/2, 0, 1/2)");
    if (x < 12.0) {
        const long double q = -0.25L * (long double)x * x;
        long double term = 1.0L, sum = 1.0L;
        for (int k = 1; k < 80; ++k) {
            term *= q / ((long double)k * k);
            sum += term;
            if (std::abs(term) < 1e-21L * std::abs(sum) + 1e-30L) break;
        }
        return double(sum);
    }
    // Hankel asymptotic expansion, truncated at the smallest term
    double p = 0.0, q = 0.0;
    double a = 1.0;  // a_k(0) = prod (2j-1)^2 / (k! 8^k)
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 60; ++k) {
        if (k > 0) a *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k);
        const double t = a / std::pow(x, k);
        if (t > prev) break;
        prev = t;
        const int r = k % 4;
        // a_k(0) carries the sign (-1)^k
        if (r == 0) p += t;
        else if (r == 1) q -= t;
        else if (r == 2) p -= t;
        else q += t;
        if (t < 1e-17) break;
    }
    const double c = (std::cos(x) + std::sin(x)) * std::numbers::sqrt2 * 0.5;  // cos(x - pi/4)
    const double s = (std::sin(x) - std::cos(x)) * std::numbers::sqrt2 * 0.5;  // sin(x - pi/4)
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * c - q * s);
}

// L1 approximation of the Caputo derivative on a uniform grid with spacing dt.
// Entry 0 is NaN (undefined at the first node).
inline std::vector<double> caputo_l1_derivative(const std::vector<double>& u, double dt, double alpha) {
    require(u.size() >= 3, "caputo_l1_derivative: need at least 3 nodes");
    require(alpha > 0.0 && alpha < 1.0, "caputo_l1_derivative: alpha must lie in (0,1)");
    require(dt > 0.0, "caputo_l1_derivative: dt must be positive");
    const std::size_t n = u.size();
    std::vector<double> b(n);
    for (std::size_t j = 0; j < n; ++j) b[j] = std::pow(j + 1.0, 1.0 - alpha) - std::pow(double(j), 1.0 - alpha);
    const double scale = std::pow(dt, -alpha) * rgamma(2.0 - alpha);
    std::vector<double> d(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 1; k < n; ++k) {
        CompensatedSum s;
        for (std::size_t j = 0; j < k; ++j) s += b[j] * (u[k - j] - u[k - j - 1]);
        d[k] = scale * s.value();
    }
    return d;
}

// Same, for samples on an explicit time grid; rejects nonuniform spacing.
inline std::vector<double> caputo_l1_derivative(const std::vector<double>& times, const std::vector<double>& u,
                                                double alpha) {
    require(times.size() == u.size(), "caputo_l1_derivative: size mismatch");
    require(times.size() >= 3, "caputo_l1_derivative: need at least 3 nodes");
    const double dt = (times.back() - times.front()) / double(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw DomainError("caputo_l1_derivative: nonuniform grid");
    return caputo_l1_derivative(u, dt, alpha);
}

// L1 value at the last node only (O(n) instead of O(n^2)).
inline double caputo_l1_last(const std::vector<double>& u, double dt, double alpha) {
    require(u.size() >= 3, "caputo_l1_derivative: need at least 3 nodes");
    const std::size_t k = u.size() - 1;
    CompensatedSum s;
    for (std::size_t j = 0; j < k; ++j)
        s += (std::pow(j + 1.0, 1.0 - alpha) - std::pow(double(j), 1.0 - alpha)) * (u[k - j] - u[k - j - 1]);
    return std::pow(dt, -alpha) * rgamma(2.0 - alpha) * s.value();
}

}  // namespace fracheat
