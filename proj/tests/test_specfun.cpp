#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "fracheat/specfun.hpp"

using namespace fracheat;
using Catch::Approx;

namespace {

// e^{x^2} erfc(x) in extended precision.
double erfcx_oracle(double x) {
    const long double lx = x;
    return double(std::exp(lx * lx) * std::erfc(lx));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Power series of J0 summed in long double, used to bracket its first zero.
double j0_series(double x) {
    long double q = -0.25L * (long double)x * x, term = 1.0L, sum = 1.0L;
    for (int k = 1; k < 60; ++k) {
        term *= q / ((long double)k * k);
        sum += term;
    }
    return double(sum);
}

}  // namespace

TEST_CASE("mittag-leffler spot values") {
    CHECK(mittag_leffler(0.3, 0.0) == 1.0);
    CHECK(mittag_leffler(1.0, 1.0) == Approx(0.3678794412).epsilon(1e-10));
    CHECK(mittag_leffler(0.5, 0.0) == 1.0);
    CHECK(mittag_leffler(0.5, 1.0) == Approx(0.4275835761).margin(1e-10));
    CHECK_THROWS_AS(mittag_leffler(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(mittag_leffler(1.2, 1.0), DomainError);
    CHECK_THROWS_AS(mittag_leffler(0.5, -1.0), DomainError);
}

TEST_CASE("mittag-leffler matches the exponential at alpha = 1") {
    double worst = 0.0;
    for (int i = 0; i <= 500; ++i) {
        const double x = 0.1 * i;
        worst = std::max(worst, rel(mittag_leffler(1.0, x), std::exp(-x)));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("mittag-leffler matches e^{x^2} erfc(x) at alpha = 1/2") {
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double x = 0.01 * i;
        worst = std::max(worst, rel(mittag_leffler(0.5, x), erfcx_oracle(x)));
    }
    CHECK(worst <= 1e-8);
    // beyond the asymptotic threshold as well
    for (double x : {30.0, 45.0, 100.0})
        CHECK(rel(mittag_leffler(0.5, x), erfcx_oracle(x)) <= 1e-10);
}

TEST_CASE("mittag-leffler is bounded and strictly decreasing") {
    for (double a : {0.2, 0.5, 0.8, 0.95}) {
        double prev = 1.0 + 1e-15;
        bool ok = true;
        for (int i = 0; i < 1000; ++i) {
            const double x = std::pow(10.0, -3.0 + 6.0 * i / 999.0);
            const double v = mittag_leffler(a, x);
            ok = ok && v > 0.0 && v <= 1.0 && v < prev;
            prev = v;
        }
        INFO("alpha = " << a);
        CHECK(ok);
    }
}

TEST_CASE("mittag-leffler regimes agree at the policy thresholds") {
    MLEvalPolicy pol;
    for (double a : {0.2, 0.4, 0.5, 0.7, 0.9, 0.95}) {
        for (double x : {pol.series_threshold, pol.asymptotic_threshold}) {
            const double xb = x * (1.0 - 1e-9), xa = x * (1.0 + 1e-9);
            INFO("alpha = " << a << " x = " << x);
            CHECK(rel(mittag_leffler(a, xb), detail::ml_integral(a, xb, false, 1e-13)) <= 10.0 * pol.accuracy);
            CHECK(rel(mittag_leffler(a, xa), detail::ml_integral(a, xa, false, 1e-13)) <= 10.0 * pol.accuracy);
            CHECK(rel(mittag_leffler(a, xb), mittag_leffler(a, xa)) <= 1e-8);
        }
    }
}

TEST_CASE("mittag-leffler approaches the exponential as alpha -> 1") {
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double x = 0.05 * i;
        worst = std::max(worst, std::abs(mittag_leffler(0.999, x) - std::exp(-x)));
    }
    CHECK(worst <= 1e-2);
}

TEST_CASE("tabulated mittag-leffler evaluator matches the direct one") {
    for (double a : {0.3, 0.5, 0.75, 0.8, 0.95, 0.999}) {
        MittagLeffler ml(a);
        double worst = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const double x = std::pow(10.0, -4.0 + 10.0 * i / 1999.0);
            worst = std::max(worst, rel(ml(x), mittag_leffler(a, x)));
        }
        INFO("alpha = " << a);
        CHECK(worst <= 1e-10);
    }
    MittagLeffler half(0.5);
    for (double x : {0.25, 3.0, 17.0, 29.0})
        CHECK(rel(half(x), erfcx_oracle(x)) <= 1e-10);
}

TEST_CASE("mittag-leffler derivative") {
    CHECK(mittag_leffler_deriv(1.0, 1.0) == Approx(-0.3678794412).epsilon(1e-10));
    CHECK(mittag_leffler_deriv(0.5, 1e-14) == Approx(-1.1283791671).epsilon(1e-9));
    for (double a : {0.3, 0.5, 0.8}) {
        for (double x : {0.2, 0.9, 1.5, 5.0, 20.0, 40.0, 200.0}) {
            const double h = 1e-5;
            const double fd = (mittag_leffler(a, x + h) - mittag_leffler(a, x - h)) / (2.0 * h);
            const double d = mittag_leffler_deriv(a, x);
            INFO("alpha = " << a << " x = " << x);
            CHECK(d < 0.0);
            CHECK(std::abs(d - fd) <= 1e-6);
        }
    }
    // alpha = 1/2: d/dx e^{x^2}erfc(x) = 2x e^{x^2}erfc(x) - 2/sqrt(pi)
    for (double x : {0.5, 2.0, 10.0, 50.0}) {
        const double exact = 2.0 * x * erfcx_oracle(x) - 2.0 / std::sqrt(std::numbers::pi);
        CHECK(rel(mittag_leffler_deriv(0.5, x), exact) <= 1e-7);
    }
}

TEST_CASE("wright-mainardi values") {
    CHECK(wright_mainardi(0.5, 0.0) == Approx(0.5641895835).epsilon(1e-10));
    CHECK(wright_mainardi(0.5, 1.0) == Approx(0.4393912895).epsilon(1e-9));
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double tau = 0.1 * i;
        const double exact = std::exp(-tau * tau / 4.0) / std::sqrt(std::numbers::pi);
        worst = std::max(worst, rel(wright_mainardi(0.5, tau), exact));
    }
    CHECK(worst <= 1e-8);
    CHECK_THROWS_AS(wright_mainardi(0.5, 1e3), DomainError);
    CHECK_THROWS_AS(wright_mainardi(1.0, 1.0), DomainError);
}

TEST_CASE("wright-mainardi series and integral branches agree") {
    for (double a : {0.25, 0.5, 0.8}) {
        for (double tau : {0.5, 1.0, 1.5, 2.0}) {
            INFO("alpha = " << a << " tau = " << tau);
            CHECK(rel(detail::wright_series(a, tau), detail::wright_integral(a, tau)) <= 1e-9);
        }
    }
}

TEST_CASE("wright-mainardi is a probability density with laplace transform E_alpha") {
    for (double a : {0.3, 0.5, 0.8}) {
        const double tmax = wright_mainardi_tau_max(a);
        auto m = [&](double tau) { return wright_mainardi(a, tau); };
        std::vector<double> pts = {0.0, tmax};
        for (double p : {0.1, 1.0, 3.0, 10.0})
            if (p < tmax) pts.push_back(p);
        auto mass = integrate_piecewise(m, pts, 1e-10);
        INFO("alpha = " << a);
        CHECK(std::abs(mass.value - 1.0) <= 1e-6);
        for (double x : {0.1, 1.0, 10.0}) {
            auto lap = integrate_piecewise([&](double tau) { return m(tau) * std::exp(-x * tau); },
                                           pts, 1e-10);
            CHECK(std::abs(lap.value - mittag_leffler(a, x)) <= 1e-6);
        }
    }
}

TEST_CASE("bessel functions of the supported orders") {
    CHECK(bessel_j(0.0, 0.0) == 1.0);
    CHECK(std::abs(bessel_j(0.5, std::numbers::pi)) < 1e-15);
    CHECK(std::abs(bessel_j(0.0, 2.4048255577)) < 1e-8);
    CHECK_THROWS_AS(bessel_j(1.0, 1.0), DomainError);
    double worst = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double x = 0.025 * i;
        worst = std::max(worst, std::abs(bessel_j(0.0, x) - std::cyl_bessel_j(0.0, x)));
    }
    CHECK(worst <= 1e-10);
    // J_{-1/2} = J_{1/2}/x - J_{3/2} from the three-term recurrence
    for (double x : {0.3, 2.0, 17.0}) {
        CHECK(bessel_j(0.5, x) == Approx(std::cyl_bessel_j(0.5, x)).epsilon(1e-13));
        const double rec = std::cyl_bessel_j(0.5, x) / x - std::cyl_bessel_j(1.5, x);
        CHECK(bessel_j(-0.5, x) == Approx(rec).epsilon(1e-12));
    }
}

TEST_CASE("first zero of J0 by bisection on the series") {
    double lo = 2.0, hi = 3.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (j0_series(mid) > 0.0 ? lo : hi) = mid;
    }
    CHECK(lo == Approx(2.4048255577).epsilon(1e-10));
    CHECK(std::abs(bessel_j(0.0, lo)) < 1e-12);
}

namespace {

double fitted_order(const std::vector<double>& hs, const std::vector<double>& errs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double x = std::log(hs[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("caputo L1 basics") {
    std::vector<double> c(50, 3.0);
    auto d = caputo_l1_derivative(c, 0.1, 0.4);
    CHECK(std::isnan(d[0]));
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] == 0.0);
    // u(t) = t: derivative t^{1-a}/Gamma(2-a); L1 is exact for linear data
    const int n = 1000;
    std::vector<double> u(n + 1);
    for (int i = 0; i <= n; ++i) u[i] = double(i) / n;
    auto du = caputo_l1_derivative(u, 1.0 / n, 0.5);
    CHECK(du[n] == Approx(1.1283791671).epsilon(1e-9));
    CHECK_THROWS_AS(caputo_l1_derivative({0.0, 0.1, 0.3}, {1.0, 1.0, 1.0}, 0.5), DomainError);
}

TEST_CASE("caputo L1 order on smooth input is 2 - alpha") {
    for (double a : {0.3, 0.5, 0.8}) {
        std::vector<double> hs, errs;
        for (int n : {100, 200, 400, 800, 1600}) {
            std::vector<double> u(n + 1);
            for (int i = 0; i <= n; ++i) {
                const double t = double(i) / n;
                u[i] = t * t;
            }
            const double exact = 2.0 * rgamma(3.0 - a);
            hs.push_back(1.0 / n);
            errs.push_back(std::abs(caputo_l1_last(u, 1.0 / n, a) - exact));
        }
        INFO("alpha = " << a);
        CHECK(std::abs(fitted_order(hs, errs) - (2.0 - a)) <= 0.2);
    }
}

TEST_CASE("caputo L1 residual of the mittag-leffler eigenfunction at alpha = 1/2") {
    const double a = 0.5;
    MittagLeffler ml(a);
    std::vector<double> hs, errs;
    for (int n : {100, 300, 1000, 3000, 10000}) {
        std::vector<double> u(n + 1);
        for (int i = 0; i <= n; ++i) u[i] = ml(std::pow(double(i) / n, a));
        hs.push_back(1.0 / n);
        errs.push_back(std::abs(caputo_l1_last(u, 1.0 / n, a) + u[n]));
    }
    CHECK(fitted_order(hs, errs) == Approx(1.5).margin(0.2));
}
