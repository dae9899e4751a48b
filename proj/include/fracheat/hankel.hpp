#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fracheat/errors.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/specfun.hpp"

namespace fracheat {

// Radial Fourier kernel: for a radial amplitude a(rho) on R^N,
//   f(r) = (2 pi)^{-N} int a(|xi|) e^{i x.xi} dxi = int_0^inf a(rho) radial_kernel(N, rho, r) drho.
inline double radial_kernel(int N, double rho, double r) {
    switch (N) {
        case 1: return std::cos(rho * r) / std::numbers::pi;
        case 2: return rho * bessel_j(0.0, rho * r) / (2.0 * std::numbers::pi);
        case 3: {
            const double x = rho * r;
            const double sinc = (std::abs(x) < 1e-4) ? 1.0 - x * x / 6.0 : std::sin(x) / x;
            return rho * rho * sinc / (2.0 * std::numbers::pi * std::numbers::pi);
        }
        default: throw DomainError("N in {1,2,3}");
    }
}

// Forward radial transform kernel: a(rho) = int_0^inf f(r) forward_kernel(N, r, rho) dr.
inline double forward_kernel(int N, double r, double rho) {
    switch (N) {
        case 1: return 2.0 * std::cos(rho * r);
        case 2: return 2.0 * std::numbers::pi * r * bessel_j(0.0, rho * r);
        case 3: {
            const double x = rho * r;
            const double sinc = (std::abs(x) < 1e-4) ? 1.0 - x * x / 6.0 : std::sin(x) / x;
            return 4.0 * std::numbers::pi * r * r * sinc;
        }
        default: throw DomainError("N in {1,2,3}");
    }
}

// j-th zero (j >= 1) of the oscillatory factor of radial_kernel in x = rho r.
inline double kernel_zero(int N, int j) {
    switch (N) {
        case 1: return (j - 0.5) * std::numbers::pi;
        case 3: return j * std::numbers::pi;
        case 2: {
            // McMahon expansion for the zeros of J0
            const double b = (j - 0.25) * std::numbers::pi;
            const double e = 1.0 / (8.0 * b);
            return b + e - 124.0 / 3.0 * e * e * e + 120928.0 / 15.0 * std::pow(e, 5);
        }
        default: throw DomainError("N in {1,2,3}");
    }
}

struct HankelOptions {
    double rel_tol = 1e-11;
    double abs_tol = 0.0;
    double structure_scale = 1.0;  // amplitude varies on this rho scale
    double amplitude_period = 0.0; // oscillation period of the amplitude in rho, 0 if it does not oscillate
    int gauss_points = 24;
    int max_tail_panels = 4000;
    int head_zero_cap = 400;
};

struct HankelResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    int panels = 0;
};

namespace detail {

struct Extrapolation {
    double value = 0.0;
    double error = 0.0;
};

// Epsilon-algorithm extrapolation of n partial sums. Among the even columns the newest entry
// with the smallest change from its predecessor wins; the table stops at roundoff level.
inline Extrapolation epsilon_extrapolate(const double* s, int n) {
    Extrapolation best{s[n - 1], n >= 2 ? std::abs(s[n - 1] - s[n - 2]) : std::numeric_limits<double>::infinity()};
    std::vector<double> e0(n, 0.0), e1(s, s + n);
    for (int k = 0; k + 1 < n; ++k) {
        std::vector<double> e2(n - k - 1);
        bool ok = true;
        for (int i = 0; i + 1 < int(e1.size()); ++i) {
            const double d = e1[i + 1] - e1[i];
            const bool even = (k % 2 == 0);
            if (d == 0.0 || !std::isfinite(d) ||
                (even && std::abs(d) <= 1e-14 * std::max(std::abs(e1[i]), std::abs(e1[i + 1])))) {
                ok = false;
                break;
            }
            e2[i] = e0[i + 1] + 1.0 / d;
        }
        if (!ok) break;
        if ((k + 1) % 2 == 0 && e2.size() >= 2) {
            const double err = std::abs(e2.back() - e2[e2.size() - 2]);
            if (std::isfinite(e2.back()) && err < best.error) best = {e2.back(), err};
        }
        e0 = std::move(e1);
        e1 = std::move(e2);
    }
    return best;
}

}  // namespace detail

// int_0^inf amp(rho) radial_kernel(N, rho, r) drho for r > 0, or the plain integral at r = 0
// (accelerated over the amplitude's half periods when it oscillates).
template <class Amp>
HankelResult radial_inverse_transform(int N, double r, Amp&& amp, const HankelOptions& opt = {}) {
    require(N >= 1 && N <= 3, "N in {1,2,3}");
    require(r >= 0.0, "radial transform: r must be nonnegative");
    const GaussRule& g = gauss_legendre(opt.gauss_points);
    auto panel = [&](double a, double b) {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < opt.gauss_points; ++i) {
            const double rho = c + h * g.nodes[i];
            s += g.weights[i] * amp(rho) * radial_kernel(N, rho, r);
        }
        return s * h;
    };
    HankelResult out;
    const double L = opt.structure_scale;
    CompensatedSum head;
    double mag = 0.0;  // sum of |panel| as a roundoff floor
    // graded panels toward the origin
    double lo_edge = L * std::ldexp(1.0, -60);
    head += panel(0.0, lo_edge);

    if (r == 0.0 && opt.amplitude_period <= 0.0) {
        double a = lo_edge;
        int quiet = 0;
        for (int k = 0; k < 4000; ++k) {
            const double b = (a < L) ? 2.0 * a : a + std::max(L, 0.25 * a);
            const double v = panel(a, b);
            head += v;
            mag += std::abs(v);
            ++out.panels;
            a = b;
            if (a > 4.0 * L && std::abs(v) <= 1e-3 * opt.rel_tol * std::abs(head.value())) {
                if (++quiet >= 4) {
                    out.value = head.value();
                    out.error = std::abs(v);
                    out.converged = true;
                    return out;
                }
            } else {
                quiet = 0;
            }
        }
        out.value = head.value();
        out.converged = false;
        return out;
    }

    // head: all zeros below ~8 L, with geometric breakpoints where the half period exceeds L.
    // At r = 0 the breakpoints follow the amplitude's own oscillation instead.
    const double half = 0.5 * opt.amplitude_period;
    auto zero = [&](int j) { return r > 0.0 ? kernel_zero(N, j) / r : j * half; };
    int j0 = 1;
    while (j0 < opt.head_zero_cap && zero(j0) < 8.0 * L) ++j0;
    const double head_end = zero(j0);
    std::vector<double> pts;
    for (double p = lo_edge; p < head_end; p *= 2.0) pts.push_back(p);
    for (int j = 1; j <= j0; ++j) pts.push_back(zero(j));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double v = panel(pts[i], pts[i + 1]);
        head += v;
        mag += std::abs(v);
        ++out.panels;
    }

    // tail: one panel per half period, epsilon-accelerated
    std::vector<double> sums;
    sums.push_back(head.value());
    CompensatedSum total = head;
    double prev_est = total.value();
    int stable = 0, quiet = 0;
    double a = head_end;
    for (int j = j0 + 1; j < j0 + opt.max_tail_panels; ++j) {
        const double b = zero(j);
        const double v = panel(a, b);
        a = b;
        total += v;
        mag += std::abs(v);
        ++out.panels;
        sums.push_back(total.value());
        const double floor = 1e-15 * mag;
        if (std::abs(v) <= 1e-3 * std::max({opt.rel_tol * std::abs(total.value()), opt.abs_tol, floor})) {
            if (++quiet >= 3) {
                out.value = total.value();
                out.error = std::abs(v);
                out.converged = true;
                return out;
            }
        } else {
            quiet = 0;
        }
        const int n = std::min<int>(int(sums.size()), 31);
        if (n >= 5) {
            const auto ex = detail::epsilon_extrapolate(sums.data() + sums.size() - n, n);
            const double est = ex.value;
            const double err = std::max(ex.error, std::abs(est - prev_est));
            prev_est = est;
            if (err <= std::max({opt.rel_tol * std::abs(est), opt.abs_tol, floor})) {
                if (++stable >= 3) {
                    out.value = est;
                    out.error = err;
                    out.converged = true;
                    return out;
                }
            } else {
                stable = 0;
            }
        }
    }
    out.value = prev_est;
    out.converged = false;
    return out;
}

}  // namespace fracheat
