#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>

#include "fracheat/kernel.hpp"

using namespace fracheat;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

double poisson(int N, double r) {
    if (N == 1) return 1.0 / (kPi * (1.0 + r * r));
    return 1.0 / (kPi * kPi * (1.0 + r * r) * (1.0 + r * r));  // N = 3
}

// Tables are shared between test cases; each build takes a fraction of a second.
const ProfileTable& table(double alpha, double s, int N, ProfileMethod m = ProfileMethod::direct) {
    static std::map<std::tuple<double, double, int, int>, ProfileTable> cache;
    auto key = std::make_tuple(alpha, s, N, int(m));
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_profile({alpha, s, N}, default_profile_grid(N), m)).first;
    return it->second;
}

// e^{y^2} erfc(y), independent of the library's Mittag-Leffler code.
double erfcx(double y) {
    if (y < 25.0) return double(std::exp((long double)y * y) * std::erfc((long double)y));
    const double z = 1.0 / (y * y);
    return (1.0 - 0.5 * z + 0.75 * z * z - 1.875 * z * z * z + 6.5625 * z * z * z * z) / (y * std::sqrt(kPi));
}

// Coefficient of the leading near-origin singularity: F ~ kappa r^{2s-N} with
// kappa = Gamma(N/2 - s) / (Gamma(1 - alpha) 4^s pi^{N/2} Gamma(s)).
double riesz_kappa(double alpha, double s, int N) {
    return std::tgamma(0.5 * N - s) / (std::tgamma(1.0 - alpha) * std::pow(4.0, s) * std::pow(kPi, 0.5 * N) * std::tgamma(s));
}

// Tail constant: r^{N+2s} F -> -C / Gamma(1 + alpha), C r^{-N-2s} the transform of |xi|^{2s}.
double tail_kappa(double alpha, double s, int N) {
    const double C = std::pow(4.0, s) * std::pow(kPi, -0.5 * N) * std::tgamma(0.5 * N + s) / std::tgamma(-s);
    return -C / std::tgamma(1.0 + alpha);
}

}  // namespace

TEST_CASE("radial inverse transform of a gaussian") {
    for (int N : {1, 2, 3}) {
        for (double r : {0.0, 1e-3, 0.3, 1.0, 2.5, 6.0}) {
            auto h = radial_inverse_transform(N, r, [](double rho) { return std::exp(-rho * rho); });
            const double exact = std::pow(4.0 * kPi, -0.5 * N) * std::exp(-0.25 * r * r);
            INFO("N=" << N << " r=" << r);
            CHECK(h.converged);
            CHECK(h.value == Approx(exact).epsilon(1e-10).margin(1e-15));
        }
    }
}

TEST_CASE("radial inverse transform of a slowly decaying amplitude") {
    // (1 + rho^2)^{-1} on R^1 inverts to e^{-r}/2; the integral converges only conditionally
    for (double r : {0.05, 0.7, 3.0, 20.0}) {
        auto h = radial_inverse_transform(1, r, [](double rho) { return 1.0 / (1.0 + rho * rho); });
        INFO("r=" << r);
        CHECK(h.converged);
        CHECK(h.value == Approx(0.5 * std::exp(-r)).epsilon(1e-9).margin(1e-14));
    }
    // and on R^3 to e^{-r}/(4 pi r)
    for (double r : {0.1, 1.0, 5.0}) {
        auto h = radial_inverse_transform(3, r, [](double rho) { return 1.0 / (1.0 + rho * rho); });
        CHECK(h.value == Approx(std::exp(-r) / (4.0 * kPi * r)).epsilon(1e-9));
    }
}

TEST_CASE("alpha = 1, s = 1/2 profile is the Poisson kernel") {
    for (int N : {1, 3}) {
        const auto& t = table(1.0, 0.5, N);
        INFO("N=" << N);
        CHECK(profile_value(t, 0.0) == Approx(poisson(N, 0.0)).epsilon(1e-6));
        double worst = 0.0;
        for (double r = 0.0; r <= 100.0; r += 0.0173) worst = std::max(worst, std::abs(profile_value(t, r) / poisson(N, r) - 1.0));
        CHECK(worst <= 1e-6);
    }
    const auto& t1 = table(1.0, 0.5, 1);
    CHECK(profile_value(t1, 0.0) == Approx(0.3183098862).epsilon(1e-9));
    CHECK(profile_value(t1, 1.0) == Approx(0.1591549431).epsilon(1e-8));
    CHECK(profile_value(t1, 2.0) == Approx(0.0636619772).epsilon(1e-8));
}

TEST_CASE("kernel value and self-similar scaling") {
    const auto& t = table(1.0, 0.5, 1);
    CHECK(kernel_value(t, 0.0, 2.0) == Approx(0.1591549431).epsilon(1e-9));
    for (double x : {0.0, 0.5, 3.0, 40.0})
        for (double tt : {0.25, 1.0, 7.0}) CHECK(kernel_value(t, x, tt) == Approx(tt / (kPi * (tt * tt + x * x))).epsilon(1e-6));
    const auto& u = table(0.5, 0.5, 3);
    const double a = u.params.scale_exponent(), N = u.params.N;
    for (double lam : {0.5, 3.0, 40.0}) {
        const double x = 0.8, tt = 2.0;
        const double lhs = kernel_value(u, x, lam * tt);
        const double rhs = std::pow(lam, -a * N) * kernel_value(u, x * std::pow(lam, -a), tt);
        CHECK(lhs == Approx(rhs).epsilon(1e-13));
    }
    CHECK_THROWS_AS(kernel_value(u, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(kernel_value(u, 1.0, -1.0), DomainError);
}

TEST_CASE("profile_value interpolation and extrapolation contracts") {
    const auto& t = table(0.5, 0.5, 2);
    for (std::size_t i : {std::size_t(0), std::size_t(17), std::size_t(300), t.grid.size() - 1})
        CHECK(profile_value(t, t.grid.node(i)) == t.values[i]);
    const double e = t.params.N + 2.0 * t.params.s;
    for (double r : {1.5e3, 1e4, 1e6}) CHECK(profile_value(t, r) / (t.kappa_hat * std::pow(r, -e)) == 1.0);
    // monotone between nodes
    double prev = profile_value(t, 1e-4);
    for (double r = 1e-4; r < 2e3; r *= 1.0137) {
        const double v = profile_value(t, r);
        CHECK(v <= prev);
        prev = v;
    }
    CHECK_THROWS_AS(profile_value(t, 0.0), DomainError);
    CHECK_THROWS_AS(profile_value(table(0.5, 0.5, 1), 0.0), DomainError);
    CHECK_THROWS_AS(profile_value(t, -1.0), DomainError);
}

TEST_CASE("profiles are positive and normalized") {
    for (double alpha : {0.5, 0.8}) {
        for (auto [s, N] : {std::pair{0.5, 1}, std::pair{0.5, 3}, std::pair{0.75, 1}}) {
            const auto& t = table(alpha, s, N);
            INFO(describe(t.params));
            for (double v : t.values) REQUIRE(v > 0.0);
            CHECK(std::abs(profile_mass(t) - 1.0) <= 1e-6);
        }
    }
    CHECK(std::abs(profile_mass(table(0.5, 0.5, 2)) - 1.0) <= 1e-6);
    CHECK(std::abs(profile_mass(table(0.3, 0.9, 1)) - 1.0) <= 1e-6);
}

TEST_CASE("direct inversion and subordination agree") {
    for (auto [alpha, s, N] : {std::tuple{0.5, 0.5, 1}, std::tuple{0.5, 0.5, 3}, std::tuple{0.5, 0.75, 1},
                               std::tuple{0.8, 0.5, 1}}) {
        const auto& d = table(alpha, s, N);
        const auto& g = table(alpha, s, N, ProfileMethod::subordination);
        CHECK(g.method == ProfileMethod::subordination);
        double worst = 0.0;
        for (double r = 0.01; r <= 100.0; r *= 1.07) worst = std::max(worst, std::abs(profile_value(g, r) / profile_value(d, r) - 1.0));
        INFO(describe(d.params));
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("tail constant") {
    const auto k = estimate_kappa_hat(table(1.0, 0.5, 1));
    CHECK(k.value == Approx(1.0 / kPi).epsilon(0.01));
    const auto k2 = estimate_kappa_hat(table(0.5, 0.5, 2));
    CHECK(k2.variation <= 0.02);
    for (auto [alpha, s, N] : {std::tuple{0.5, 0.5, 1}, std::tuple{0.5, 0.5, 3}, std::tuple{0.8, 0.75, 1},
                               std::tuple{0.5, 0.5, 2}}) {
        const auto& t = table(alpha, s, N);
        INFO(describe(t.params));
        CHECK(t.tail_variation <= 0.02);
        CHECK(estimate_kappa_hat(t).value == Approx(tail_kappa(alpha, s, N)).epsilon(0.01));
    }
}

TEST_CASE("near-origin laws") {
    SECTION("power law for 2s < N") {
        const auto& t = table(0.5, 0.5, 3);
        CHECK(t.law == NearOriginLaw::power);
        CHECK(t.diag.near_origin_slope == Approx(-2.0).epsilon(0.03));
        const auto k = estimate_kappa(t);
        CHECK(k.spread <= 0.05);
        CHECK(k.value == Approx(riesz_kappa(0.5, 0.5, 3)).epsilon(1e-3));
        CHECK(estimate_kappa(table(0.5, 0.5, 2)).value == Approx(riesz_kappa(0.5, 0.5, 2)).epsilon(0.01));
    }
    SECTION("logarithmic law for 2s = N = 1") {
        const auto& t = table(0.5, 0.5, 1);
        CHECK(t.law == NearOriginLaw::log);
        CHECK(t.diag.log_ratio_variation <= 0.05);
        // -log r coefficient: the Bessel potential of order 1/2 on the line is K_0(r)/pi
        CHECK(estimate_kappa(t).value == Approx(1.0 / (std::tgamma(0.5) * kPi)).epsilon(1e-3));
    }
    SECTION("finite value at the origin for 2s > N = 1") {
        const auto& t = table(0.5, 0.75, 1);
        CHECK(t.law == NearOriginLaw::constant);
        // F(0) = (1/pi) int_0^inf E_{1/2}(-eta^{3/2}) d eta, with E_{1/2}(-y) = erfcx(y)
        auto f = [](double u) {
            const double eta = std::exp(u);
            return eta * erfcx(std::pow(eta, 1.5));
        };
        auto q = integrate_adaptive(f, -40.0, 90.0, 1e-12);
        const double oracle = q.value / kPi;
        CHECK(estimate_kappa(t).value == Approx(oracle).epsilon(1e-8));
        // Mellin evaluation of the same integral
        const double s = 0.75, alpha = 0.5;
        const double mellin = std::tgamma(1.0 / (2 * s)) * std::tgamma(1.0 - 1.0 / (2 * s)) /
                              (2 * s * kPi * std::tgamma(1.0 - alpha / (2 * s)));
        CHECK(oracle == Approx(mellin).epsilon(1e-9));
        CHECK(kernel_value(t, 0.0, 9.0) == Approx(std::pow(9.0, -alpha / (2 * s)) * oracle).epsilon(1e-8));
    }
    SECTION("no singular constant without memory") {
        try {
            estimate_kappa(table(1.0, 0.5, 3));
            FAIL("expected an error");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("undefined at alpha=1") != std::string::npos);
        }
    }
}

TEST_CASE("large-r expansion matches quadrature where both apply") {
    for (auto p : {ModelParams{0.5, 0.5, 1}, ModelParams{0.8, 0.75, 1}, ModelParams{0.5, 0.5, 3}}) {
        detail::DirectInverter inv(p, 1e-12);
        for (double r : {25.0, 60.0}) {
            auto series = detail::tail_expansion(p, r);
            REQUIRE(series.has_value());
            CHECK(*series == Approx(inv(r).value).epsilon(1e-9));
        }
    }
}

TEST_CASE("gradient bounds") {
    const auto poisson_rep = check_gradient_bounds(table(1.0, 0.5, 1));
    CHECK(poisson_rep.tail_exponent == Approx(-3.0).epsilon(0.03));
    CHECK(poisson_rep.tail_constant_max == Approx(2.0 / kPi).epsilon(0.01));
    CHECK(poisson_rep.bounded_near_origin);

    const auto rep3 = check_gradient_bounds(table(0.5, 0.5, 3));
    CHECK(rep3.near_origin_exponent == Approx(-3.0).epsilon(0.05));
    CHECK(rep3.tail_exponent == Approx(-5.0).epsilon(0.05));

    // for 2s > N = 1 the derivative behaves like r^{2s-2} near the origin
    const auto rep1 = check_gradient_bounds(table(0.5, 0.75, 1));
    CHECK(rep1.near_origin_exponent == Approx(2 * 0.75 - 2.0).epsilon(0.1));
    CHECK(rep1.tail_exponent == Approx(-3.5).epsilon(0.05));
}

TEST_CASE("gradient is bounded at the origin when 2s > N = 1", "[!shouldfail]") {
    // The bound claimed for this regime does not hold with memory: F(r) - F(0) ~ a r^{2s-1}
    // with a != 0, so |F'| grows like r^{2s-2}.
    const auto rep = check_gradient_bounds(table(0.5, 0.75, 1));
    CHECK(rep.bounded_near_origin);
}

TEST_CASE("build errors") {
    CHECK_THROWS_AS(build_profile({0.5, 1.0, 1}), DomainError);
    CHECK_THROWS_AS(build_profile({0.5, 0.5, 4}), DomainError);
    CHECK_THROWS_AS(build_profile({0.5, 0.5, 1}, RadialGrid::uniform(1, 0.0, 1.0, 100)), DomainError);
    CHECK_THROWS_AS(build_profile({0.5, 0.5, 2}, default_profile_grid(1)), DomainError);
    // a grid too short for the tail law is reported, not silently accepted
    auto t = build_profile_unchecked({0.5, 0.5, 1}, RadialGrid::logarithmic(1, 1e-4, 3.0, 200));
    CHECK_FALSE(t.diag.failures.empty());
    CHECK_THROWS_AS(build_profile({0.5, 0.5, 1}, RadialGrid::logarithmic(1, 1e-4, 3.0, 200)), NumericalError);
}
