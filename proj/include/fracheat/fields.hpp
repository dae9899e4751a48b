#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/core.hpp"
#include "fracheat/errors.hpp"
#include "fracheat/hankel.hpp"
#include "fracheat/kernel.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/specfun.hpp"

namespace fracheat {

enum class DatumFamily { gaussian, bump, power_tail, indicator, table };

inline std::string to_string(DatumFamily f) {
    switch (f) {
        case DatumFamily::gaussian: return "gaussian";
        case DatumFamily::bump: return "bump";
        case DatumFamily::power_tail: return "power_tail";
        case DatumFamily::indicator: return "indicator";
        case DatumFamily::table: return "table";
    }
    return "?";
}

namespace detail {

// Radial Fourier transform of a compactly supported datum, tabulated once on Chebyshev patches.
class TransformTable {
public:
    template <class F>
    TransformTable(int N, double R, F&& u0, double mass) : N_(N), R_(R) {
        width_ = 8.0 / R;
        const int deg = 32;
        std::vector<double> cheb(deg + 1);
        for (int k = 0; k <= deg; ++k) cheb[k] = std::cos(std::numbers::pi * (k + 0.5) / (deg + 1));
        int quiet = 0;
        for (int patch = 0; patch < 20000; ++patch) {
            const double a = patch * width_, b = a + width_;
            std::vector<double> f(deg + 1);
            double big = 0.0;
            for (int k = 0; k <= deg; ++k) {
                f[k] = direct(u0, 0.5 * (a + b) + 0.5 * (b - a) * cheb[k]);
                big = std::max(big, std::abs(f[k]));
            }
            std::vector<double> c(deg + 1);
            for (int j = 0; j <= deg; ++j) {
                double s = 0.0;
                for (int k = 0; k <= deg; ++k) s += f[k] * std::cos(std::numbers::pi * j * (k + 0.5) / (deg + 1));
                c[j] = 2.0 * s / (deg + 1);
            }
            c[0] *= 0.5;
            coef_.push_back(std::move(c));
            if (big < 1e-14 * mass) {
                if (++quiet >= 3) break;
            } else {
                quiet = 0;
            }
        }
    }

    double operator()(double rho) const {
        const std::size_t i = std::size_t(rho / width_);
        if (i >= coef_.size()) return 0.0;
        const double a = i * width_, b = a + width_;
        const double u = (2.0 * rho - a - b) / (b - a);
        const auto& c = coef_[i];
        double b1 = 0.0, b2 = 0.0;
        for (int k = int(c.size()) - 1; k >= 1; --k) {
            const double b0 = 2.0 * u * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        return u * b1 - b2 + c[0];
    }

private:
    template <class F>
    double direct(F& u0, double rho) const {
        const int panels = std::max(4, int(std::ceil(rho * R_ / 2.0)));
        CompensatedSum s;
        for (int j = 0; j < panels; ++j) {
            const double a = R_ * j / panels, b = R_ * (j + 1) / panels;
            s += gauss_fixed([&](double r) { return u0(r) * forward_kernel(N_, r, rho); }, a, b, 24);
        }
        return s.value();
    }

    int N_;
    double R_;
    double width_ = 1.0;
    std::vector<std::vector<double>> coef_;
};

}  // namespace detail

// Nonnegative radial initial datum.
//   gaussian:   a exp(-r^2 / w^2)
//   bump:       a exp(1 - 1 / (1 - (r/R)^2)) on r < R (peak value a)
//   power_tail: A (1 + r^2)^{-beta/2}
//   indicator:  a on r < R
//   table:      linear interpolation of samples, zero beyond the last one
class InitialDatum {
public:
    static InitialDatum gaussian(int N, double width, double amplitude = 1.0) {
        require(width > 0.0 && amplitude > 0.0, "gaussian datum: width and amplitude must be positive");
        InitialDatum d(DatumFamily::gaussian, N);
        d.scale_ = width;
        d.amp_ = amplitude;
        return d;
    }
    static InitialDatum bump(int N, double radius, double amplitude = 1.0) {
        require(radius > 0.0 && amplitude > 0.0, "bump datum: radius and amplitude must be positive");
        InitialDatum d(DatumFamily::bump, N);
        d.scale_ = radius;
        d.amp_ = amplitude;
        return d;
    }
    // Bump rescaled to the requested mass.
    static InitialDatum bump_with_mass(int N, double radius, double mass) {
        const double m1 = bump(N, radius).mass();
        return bump(N, radius, mass / m1);
    }
    static InitialDatum power_tail(int N, double beta, double A = 1.0) {
        require(A > 0.0, "power_tail datum: A must be positive");
        if (!(beta > N)) throw HypothesisError("power_tail datum: beta must exceed N for integrability");
        InitialDatum d(DatumFamily::power_tail, N);
        d.scale_ = 1.0;
        d.amp_ = A;
        d.beta_ = beta;
        return d;
    }
    static InitialDatum indicator(int N, double radius, double amplitude = 1.0) {
        require(radius > 0.0 && amplitude > 0.0, "indicator datum: radius and amplitude must be positive");
        InitialDatum d(DatumFamily::indicator, N);
        d.scale_ = radius;
        d.amp_ = amplitude;
        return d;
    }
    static InitialDatum table(int N, std::vector<double> r, std::vector<double> v) {
        require(r.size() == v.size() && r.size() >= 2, "table datum: need matching radius/value samples");
        for (std::size_t i = 0; i < r.size(); ++i) {
            require(v[i] >= 0.0, "table datum: values must be nonnegative");
            require(i == 0 ? r[0] >= 0.0 : r[i] > r[i - 1], "table datum: radii must increase from r >= 0");
        }
        InitialDatum d(DatumFamily::table, N);
        d.tr_ = std::make_shared<std::vector<double>>(std::move(r));
        d.tv_ = std::make_shared<std::vector<double>>(std::move(v));
        d.scale_ = d.tr_->back();
        d.amp_ = *std::max_element(d.tv_->begin(), d.tv_->end());
        require(d.amp_ > 0.0, "table datum: must not vanish identically");
        return d;
    }

    // Same shape times c (used for linearity checks).
    InitialDatum scaled(double c) const {
        require(c > 0.0, "scaled: factor must be positive");
        InitialDatum d = *this;
        d.amp_ *= c;
        if (d.tv_) {
            auto v = *d.tv_;
            for (auto& x : v) x *= c;
            d.tv_ = std::make_shared<std::vector<double>>(std::move(v));
        }
        d.transform_.reset();
        return d;
    }

    DatumFamily family() const { return family_; }
    int dimension() const { return N_; }
    double amplitude() const { return amp_; }
    // Width (gaussian), radius (bump, indicator), 1 (power tail) or last sample radius (table).
    double scale() const { return scale_; }
    double beta() const { return beta_; }
    // Samples of a tabulated datum (empty otherwise).
    std::vector<double> table_radii() const { return tr_ ? *tr_ : std::vector<double>{}; }
    std::vector<double> table_values() const { return tv_ ? *tv_ : std::vector<double>{}; }
    // Radius outside which u0 vanishes, or infinity.
    double support_radius() const {
        switch (family_) {
            case DatumFamily::bump:
            case DatumFamily::indicator:
            case DatumFamily::table: return scale_;
            default: return kInf;
        }
    }

    double operator()(double r) const {
        r = std::abs(r);
        switch (family_) {
            case DatumFamily::gaussian: return amp_ * std::exp(-(r / scale_) * (r / scale_));
            case DatumFamily::bump: {
                if (r >= scale_) return 0.0;
                const double q = r / scale_;
                return amp_ * std::exp(1.0 - 1.0 / (1.0 - q * q));
            }
            case DatumFamily::power_tail: return amp_ * std::pow(1.0 + r * r, -0.5 * beta_);
            case DatumFamily::indicator: return r < scale_ ? amp_ : 0.0;
            case DatumFamily::table: {
                const auto& x = *tr_;
                const auto& y = *tv_;
                if (r > x.back()) return 0.0;
                if (r <= x.front()) return y.front();
                const std::size_t i = std::size_t(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 1;
                if (i + 1 >= x.size()) return y.back();
                const double w = (r - x[i]) / (x[i + 1] - x[i]);
                return y[i] + w * (y[i + 1] - y[i]);
            }
        }
        return 0.0;
    }

    // int u0 over R^N.
    double mass() const {
        const double w = sphere_area(N_);
        switch (family_) {
            case DatumFamily::gaussian: return amp_ * std::pow(scale_ * scale_ * std::numbers::pi, 0.5 * N_);
            case DatumFamily::indicator: return amp_ * ball_volume(N_, scale_);
            case DatumFamily::power_tail:
                return amp_ * std::pow(std::numbers::pi, 0.5 * N_) * std::tgamma(0.5 * (beta_ - N_)) / std::tgamma(0.5 * beta_);
            case DatumFamily::bump: {
                auto f = [&](double r) { return (*this)(r) * std::pow(r, N_ - 1); };
                return w * integrate_adaptive(f, 0.0, scale_, 1e-14, 0.0, 4000).value;
            }
            case DatumFamily::table: {
                // exact integral of the piecewise linear interpolant against r^{N-1}
                const auto& x = *tr_;
                const auto& y = *tv_;
                CompensatedSum s;
                s += y.front() * std::pow(x.front(), N_) / N_;
                for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                    auto piece = [&](double r) {
                        const double t = (r - x[i]) / (x[i + 1] - x[i]);
                        return (y[i] + t * (y[i + 1] - y[i])) * std::pow(r, N_ - 1);
                    };
                    s += gauss_fixed(piece, x[i], x[i + 1], 4);
                }
                return w * s.value();
            }
        }
        return 0.0;
    }

    bool has_transform() const { return family_ != DatumFamily::table; }

    // Radial Fourier transform int u0(x) e^{-i x.xi} dx at |xi| = rho.
    double transform(double rho) const {
        require(rho >= 0.0, "transform: rho must be nonnegative");
        const double pi = std::numbers::pi;
        switch (family_) {
            case DatumFamily::gaussian:
                return mass() * std::exp(-0.25 * scale_ * scale_ * rho * rho);
            case DatumFamily::power_tail: {
                if (rho < 1e-200) return mass();
                const double b = 0.5 * beta_, nu = b - 0.5 * N_;
                return amp_ * std::pow(2.0 * pi, 0.5 * N_) * std::pow(2.0, 1.0 - b) / std::tgamma(b) *
                       std::pow(rho, nu) * std::cyl_bessel_k(nu, rho);
            }
            case DatumFamily::indicator: {
                const double R = scale_, x = rho * R;
                if (x < 1e-3) {
                    // series: volume times (1 - x^2 / (2 (N + 2)))
                    return mass() * (1.0 - x * x / (2.0 * (N_ + 2)));
                }
                switch (N_) {
                    case 1: return amp_ * 2.0 * std::sin(x) / rho;
                    case 2: return amp_ * 2.0 * pi * R * std::cyl_bessel_j(1.0, x) / rho;
                    case 3: return amp_ * 4.0 * pi * (std::sin(x) - x * std::cos(x)) / (rho * rho * rho);
                    default: throw DomainError("indicator transform: N in {1,2,3}");
                }
            }
            case DatumFamily::bump: {
                if (!transform_) {
                    InitialDatum unit = *this;
                    unit.amp_ = 1.0;
                    transform_ = std::make_shared<detail::TransformTable>(N_, scale_, unit, unit.mass());
                }
                return amp_ * (*transform_)(rho);
            }
            case DatumFamily::table: throw DomainError("transform unavailable for tabulated data");
        }
        return 0.0;
    }

    DatumHypotheses hypotheses() const {
        DatumHypotheses h;
        h.in_lp = true;
        h.local_lp = true;
        h.beta = beta_;
        h.in_DN = beta_ >= N_;
        return h;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << to_string(family_) << "(N=" << N_;
        switch (family_) {
            case DatumFamily::gaussian: os << ", width=" << scale_ << ", amplitude=" << amp_; break;
            case DatumFamily::bump:
            case DatumFamily::indicator: os << ", radius=" << scale_ << ", amplitude=" << amp_; break;
            case DatumFamily::power_tail: os << ", beta=" << beta_ << ", A=" << amp_; break;
            case DatumFamily::table: os << ", samples=" << tr_->size(); break;
        }
        os << ")";
        return os.str();
    }

    // Surface integral of u0 over the sphere |y - x| = q, for |x| = x.
    double sphere_average(double x, double q) const;

    // Radii where the angular average has kinks or steep features.
    std::vector<double> feature_radii(double x) const;

private:
    InitialDatum(DatumFamily f, int N) : family_(f), N_(N) {
        require(N >= 1 && N <= 3, "datum: N must be 1, 2 or 3");
    }

    // int_a^b rho u0(rho) d rho, written to avoid cancellation when b - a is small.
    double rho_moment(double a, double b) const;

    DatumFamily family_;
    int N_;
    double scale_ = 1.0;
    double amp_ = 1.0;
    double beta_ = kInf;
    std::shared_ptr<std::vector<double>> tr_, tv_;
    mutable std::shared_ptr<detail::TransformTable> transform_;
};

namespace detail {

// e^{-z} I_0(z)
inline double scaled_bessel_i0(double z) {
    if (z < 600.0) return std::exp(-z) * std::cyl_bessel_i(0.0, z);
    const double iz = 1.0 / (8.0 * z);
    return (1.0 + iz + 9.0 / 2.0 * iz * iz + 225.0 / 6.0 * iz * iz * iz) / std::sqrt(2.0 * std::numbers::pi * z);
}

}  // namespace detail

inline double InitialDatum::rho_moment(double a, double b) const {
    if (b <= a) return 0.0;
    switch (family_) {
        case DatumFamily::gaussian: {
            const double w2 = scale_ * scale_;
            return -0.5 * amp_ * w2 * std::exp(-a * a / w2) * std::expm1(-(b - a) * (b + a) / w2);
        }
        case DatumFamily::power_tail: {
            const double c = 1.0 - 0.5 * beta_;
            const double L = std::log1p((b - a) * (b + a) / (1.0 + a * a));
            if (std::abs(c) < 1e-14) return 0.5 * amp_ * L;
            return 0.5 * amp_ * std::pow(1.0 + a * a, c) * std::expm1(c * L) / c;
        }
        case DatumFamily::indicator: {
            const double hi = std::min(b, scale_);
            return hi > a ? 0.5 * amp_ * (hi - a) * (hi + a) : 0.0;
        }
        default: {
            const double hi = std::min(b, support_radius());
            if (hi <= a) return 0.0;
            std::vector<double> pts{a, hi};
            if (tr_)
                for (double r : *tr_)
                    if (r > a && r < hi) pts.push_back(r);
            return integrate_piecewise([&](double r) { return r * (*this)(r); }, pts, 1e-12).value;
        }
    }
}

inline double InitialDatum::sphere_average(double x, double q) const {
    const double w = sphere_area(N_);
    if (x == 0.0 || q == 0.0) return w * (*this)(x + q);
    switch (N_) {
        case 1: return (*this)(x - q) + (*this)(x + q);
        case 3: return 2.0 * std::numbers::pi / (x * q) * rho_moment(std::abs(x - q), x + q);
        case 2: {
            const double pi = std::numbers::pi;
            if (family_ == DatumFamily::gaussian) {
                const double w2 = scale_ * scale_, d = x - q;
                return 2.0 * pi * amp_ * std::exp(-d * d / w2) * detail::scaled_bessel_i0(2.0 * x * q / w2);
            }
            if (family_ == DatumFamily::indicator) {
                const double R = scale_;
                if (std::abs(x - q) >= R) return 0.0;
                if (x + q <= R) return 2.0 * pi * amp_;
                const double c = std::clamp((x * x + q * q - R * R) / (2.0 * x * q), -1.0, 1.0);
                return 2.0 * amp_ * std::acos(c);
            }
            // angle theta between y - x and -x: |y| = sqrt(x^2 + q^2 - 2 x q cos theta)
            auto f = [&](double th) {
                const double r2 = (x - q) * (x - q) + 2.0 * x * q * (1.0 - std::cos(th));
                return (*this)(std::sqrt(std::max(r2, 0.0)));
            };
            std::vector<double> pts{0.0, pi};
            const double R = support_radius();
            if (R < kInf) {
                const double c = (x * x + q * q - R * R) / (2.0 * x * q);
                if (c > -1.0 && c < 1.0) pts.push_back(std::acos(c));
            }
            return 2.0 * integrate_piecewise(f, pts, 1e-12).value;
        }
        default: throw DomainError("sphere_average: N in {1,2,3}");
    }
}

inline std::vector<double> InitialDatum::feature_radii(double x) const {
    std::vector<double> v;
    const double w = scale_;
    for (double k : {-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0}) v.push_back(x + k * w);
    const double R = support_radius();
    if (R < kInf) {
        v.push_back(std::abs(x - R));
        v.push_back(x + R);
    }
    if (tr_)
        for (double r : *tr_) {
            v.push_back(std::abs(x - r));
            v.push_back(x + r);
        }
    v.erase(std::remove_if(v.begin(), v.end(), [](double r) { return !(r > 0.0); }), v.end());
    return v;
}

struct RadialConvolution {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

namespace detail {

// int_0^inf k(q) S(x, q) dq with k the radial kernel density (kernel times q^{N-1}).
// cap(eps) must return int_0^eps k; tail_exponent is the decay exponent of k S for large q
// (used only for data of unbounded support).
template <class K, class Cap>
RadialConvolution convolve_radial(const InitialDatum& d, double x, K&& k, Cap&& cap, double q_lo,
                                  double tail_exponent, std::vector<double> features, double rel_tol = 1e-10) {
    const double R = d.support_radius();
    double q_hi;
    if (R < kInf) {
        q_hi = x + R;
    } else if (d.family() == DatumFamily::gaussian) {
        q_hi = x + 9.0 * d.scale();
    } else {
        q_hi = 1e6 * std::max({x, 1.0, *std::max_element(features.begin(), features.end())});
    }
    std::vector<double> pts{std::log(q_lo), std::log(q_hi)};
    for (double f : features)
        if (f > q_lo && f < q_hi) pts.push_back(std::log(f));
    auto integrand = [&](double v) {
        const double q = std::exp(v);
        return q * k(q) * d.sphere_average(x, q);
    };
    auto res = integrate_piecewise(integrand, pts, rel_tol);
    RadialConvolution out;
    out.value = res.value + cap(q_lo) * d.sphere_average(x, 0.0);
    if (R == kInf && d.family() != DatumFamily::gaussian) {
        // power-law tail of the integrand beyond q_hi
        const double fq = q_hi * k(q_hi) * d.sphere_average(x, q_hi);
        out.value += fq / (tail_exponent - 1.0);
    }
    out.error = res.error;
    out.converged = res.converged;
    return out;
}

// int of F over the ball of radius R <= first grid node, from the near-origin law.
inline double profile_ball_mass(const ProfileTable& t, double R) {
    const double N = t.params.N, s2 = 2.0 * t.params.s, w = sphere_area(t.params.N);
    const double r0 = t.grid.front(), f0 = t.values.front();
    require(R <= r0 * (1.0 + 1e-12), "profile_ball_mass: radius beyond the near-origin law");
    switch (t.law) {
        case NearOriginLaw::power: return w * f0 * std::pow(r0, N - s2) * std::pow(R, s2) / s2;
        case NearOriginLaw::log:
            return w * ((f0 + t.kappa.value_or(0.0) * std::log(r0 / R)) * std::pow(R, N) / N +
                        t.kappa.value_or(0.0) * std::pow(R, N) / (N * N));
        case NearOriginLaw::constant: {
            const double F0 = t.value_at_origin.value_or(f0);
            const double g = (t.params.alpha < 1.0) ? s2 - N : 2.0;
            return w * (F0 * std::pow(R, N) / N + (f0 - F0) * std::pow(r0, -g) * std::pow(R, N + g) / (N + g));
        }
    }
    return 0.0;
}

}  // namespace detail

enum class Route { fourier, convolution };

inline std::string to_string(Route r) { return r == Route::fourier ? "fourier" : "convolution"; }

struct SolutionField {
    ModelParams params;
    std::string datum;
    double datum_mass = 0.0;
    double t = 0.0;
    RadialGrid grid;
    std::vector<double> values;
    Route route = Route::fourier;
    double mass = 0.0;          // quadrature mass with tail extrapolation
    double mass_error = 0.0;    // relative to datum_mass
    double worst_error = 0.0;   // largest per-node quadrature error estimate (relative)
    int nonconverged = 0;

    RadialField radial() const { return {grid, values}; }
};

// int u over R^N for a field on a grid: grid quadrature, inner ball at the first value and a
// power-law tail c r^{-e} fitted to the last node.
inline double field_mass(const RadialGrid& g, const std::vector<double>& v, double tail_exponent) {
    const int N = g.dimension();
    double m = g.integrate(v);
    if (g.front() > 0.0) m += g.origin_cap() * v.front();
    if (tail_exponent > N) m += sphere_area(N) * v.back() * std::pow(g.back(), N) / (tail_exponent - N);
    return m;
}

namespace detail {

inline double field_tail_exponent(const InitialDatum& d, const ModelParams& p) {
    return std::min(d.beta(), p.N + 2.0 * p.s);
}

inline void finish_field(SolutionField& f, const InitialDatum& d) {
    f.mass = field_mass(f.grid, f.values, field_tail_exponent(d, f.params));
    f.datum_mass = d.mass();
    f.mass_error = std::abs(f.mass / f.datum_mass - 1.0);
}

}  // namespace detail

// u(r, t) at one radius by inverting E_alpha(-rho^{2s} t^alpha) u0^(rho).
inline HankelResult fourier_point(const InitialDatum& d, const ModelParams& p, const MittagLeffler& ml, double t,
                                  double r, double rel_tol = 1e-11) {
    const double ta = std::pow(t, p.alpha);
    auto amp = [&](double rho) { return ml(std::pow(rho, 2.0 * p.s) * ta) * d.transform(rho); };
    HankelOptions opt;
    opt.rel_tol = rel_tol;
    opt.structure_scale = std::min(1.0 / d.scale(), std::pow(t, -p.scale_exponent()));
    if (d.family() == DatumFamily::indicator || d.family() == DatumFamily::bump || d.family() == DatumFamily::table)
        opt.amplitude_period = 2.0 * std::numbers::pi / d.support_radius();
    opt.abs_tol = 1e-3 * rel_tol * d.mass() * std::pow(opt.structure_scale, p.N);
    return radial_inverse_transform(p.N, r, amp, opt);
}

inline SolutionField mild_solution_fourier(const InitialDatum& d, const ModelParams& p, double t,
                                           const RadialGrid& grid, unsigned threads = 0) {
    p.validate();
    if (!(t > 0.0)) throw DomainError("mild_solution_fourier: t must be positive");
    require(d.dimension() == p.N && grid.dimension() == p.N, "mild_solution_fourier: dimension mismatch");
    if (!d.has_transform()) throw DomainError("mild_solution_fourier: transform unavailable for " + d.describe());
    d.transform(0.0);  // build any cached transform before going parallel
    MittagLeffler ml(p.alpha);
    SolutionField f;
    f.params = p;
    f.datum = d.describe();
    f.t = t;
    f.grid = grid;
    f.route = Route::fourier;
    f.values.assign(grid.size(), 0.0);
    std::vector<HankelResult> res(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { res[i] = fourier_point(d, p, ml, t, grid.node(i)); }, threads);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f.values[i] = res[i].value;
        if (!res[i].converged) ++f.nonconverged;
        if (res[i].value != 0.0) f.worst_error = std::max(f.worst_error, res[i].error / std::abs(res[i].value));
    }
    detail::finish_field(f, d);
    return f;
}

// u(x, t) = int Z(x - y, t) u0(y) dy at one radius.
inline RadialConvolution convolution_point(const InitialDatum& d, const ProfileTable& table, double t, double x,
                                           double rel_tol = 1e-10) {
    const auto& p = table.params;
    const double a = p.scale_exponent(), ta = std::pow(t, a);
    const double pre = std::pow(t, -a * p.N);
    const int N = p.N;
    auto k = [&](double q) { return pre * profile_value(table, q / ta) * std::pow(q, N - 1); };
    auto cap = [&](double eps) { return detail::profile_ball_mass(table, eps / ta) / sphere_area(N); };
    double q_lo = 1e-3 * table.grid.front() * ta;
    q_lo = std::min(q_lo, 1e-8 * d.scale());
    if (x > 0.0) q_lo = std::min(q_lo, 1e-8 * x);
    auto features = d.feature_radii(x);
    for (double c : {0.1, 1.0, 10.0}) features.push_back(c * ta);
    const double tail_exp = std::isfinite(d.beta()) ? d.beta() + 2.0 * p.s + 1.0 : kInf;
    return detail::convolve_radial(d, x, k, cap, q_lo, tail_exp, features, rel_tol);
}

inline SolutionField mild_solution_convolution(const InitialDatum& d, const ProfileTable& table, double t,
                                               const RadialGrid& grid, unsigned threads = 0) {
    const auto& p = table.params;
    if (!(t > 0.0)) throw DomainError("mild_solution_convolution: t must be positive");
    require(d.dimension() == p.N && grid.dimension() == p.N, "mild_solution_convolution: dimension mismatch");
    SolutionField f;
    f.params = p;
    f.datum = d.describe();
    f.t = t;
    f.grid = grid;
    f.route = Route::convolution;
    f.values.assign(grid.size(), 0.0);
    std::vector<RadialConvolution> res(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { res[i] = convolution_point(d, table, t, grid.node(i)); }, threads);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f.values[i] = res[i].value;
        if (!res[i].converged) ++f.nonconverged;
        if (res[i].value != 0.0) f.worst_error = std::max(f.worst_error, res[i].error / std::abs(res[i].value));
    }
    detail::finish_field(f, d);
    return f;
}

// Phi(x) = int u0(y) |x - y|^{2s-N} dy, for 2s < N.
inline double riesz_potential_point(const InitialDatum& d, const ModelParams& p, double x) {
    p.validate();
    if (!(2.0 * p.s < p.N)) throw DomainError("riesz_potential: requires 2s < N");
    require(d.dimension() == p.N, "riesz_potential: dimension mismatch");
    const double s2 = 2.0 * p.s;
    auto k = [&](double q) { return std::pow(q, s2 - 1.0); };
    // exact integral of the power kernel against a locally constant datum
    auto cap = [&](double eps) { return std::pow(eps, s2) / s2; };
    double q_lo = 1e-8 * d.scale();
    if (x > 0.0) q_lo = std::min(q_lo, 1e-8 * x);
    const double tail_exp = std::isfinite(d.beta()) ? d.beta() + 1.0 - s2 : kInf;
    auto features = d.feature_radii(x);
    features.push_back(1.0);
    return detail::convolve_radial(d, x, k, cap, q_lo, tail_exp, features, 1e-11).value;
}

inline std::vector<double> riesz_potential(const InitialDatum& d, const ModelParams& p,
                                           const std::vector<double>& points, unsigned threads = 0) {
    if (!(2.0 * p.s < p.N)) throw DomainError("riesz_potential: requires 2s < N");
    std::vector<double> out(points.size());
    parallel_for(points.size(), [&](std::size_t i) { out[i] = riesz_potential_point(d, p, points[i]); }, threads);
    return out;
}

inline double mass(const InitialDatum& d) { return d.mass(); }
inline double mass(const SolutionField& f) { return f.mass; }

}  // namespace fracheat
