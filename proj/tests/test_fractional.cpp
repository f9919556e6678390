#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cfd/fractional.hpp"

using namespace cfd;

namespace {

const QuadratureConfig kQuad{};

ScalarSignal sig(std::function<double(double)> f, double lo = -10.0, double hi = 10.0) {
    return ScalarSignal(std::move(f), lo, hi);
}

// Brute-force reference: adaptive quadrature applied directly to the weighted
// integrand |s|^(alpha-1) f(s), valid away from s = 0.
double weighted_reference(const FractionalOrder& order, const ScalarSignal& f, double t0,
                          double t) {
    auto g = [&](double s) {
        return std::pow(std::abs(s), order.value() - 1.0) * f(s);
    };
    return quad::integrate(g, t0, t, kQuad);
}

}  // namespace

TEST_CASE("fractional order validates its range") {
    CHECK_NOTHROW(FractionalOrder(1.0));
    CHECK_NOTHROW(FractionalOrder(0.25));
    CHECK_THROWS_AS(FractionalOrder(0.0), PreconditionError);
    CHECK_THROWS_AS(FractionalOrder(1.5), PreconditionError);
    CHECK_THROWS_AS(FractionalOrder(-0.3), PreconditionError);
}

TEST_CASE("time transform and its inverse") {
    FractionalOrder half(0.5);
    CHECK(half.transform(4.0) == doctest::Approx(4.0));   // 2*sqrt(4)
    CHECK(half.transform(-4.0) == doctest::Approx(-4.0));
    CHECK(half.transform(0.0) == 0.0);
    for (double t : {-3.7, -0.2, 0.4, 9.0})
        CHECK(half.inverse_transform(half.transform(t)) == doctest::Approx(t));
}

TEST_CASE("ml_scalar matches the defining exponential") {
    FractionalOrder half(0.5);
    // exp(-1 * 4^0.5 / 0.5) = exp(-4)
    CHECK(ml_scalar(half, -1.0, 4.0) == doctest::Approx(0.018315638888734179).epsilon(1e-12));
    // alpha = 1 reduces to the classical exponential
    CHECK(ml_scalar(FractionalOrder(1.0), 2.0, 3.0) ==
          doctest::Approx(403.42879349273511).epsilon(1e-12));
    // t = 0 gives 1 for any order and rate
    CHECK(ml_scalar(FractionalOrder(0.3), 17.0, 0.0) == 1.0);
    // negative-time branch: exp(-lambda (-t)^alpha / alpha)
    CHECK(ml_scalar(half, 1.0, -4.0) == doctest::Approx(0.018315638888734179).epsilon(1e-12));
}

TEST_CASE("ml_scalar overflow guard") {
    CHECK_THROWS_AS(ml_scalar(FractionalOrder(1.0), 1000.0, 1.0), OverflowError);
    CHECK_THROWS_AS(ml_scalar(FractionalOrder(0.5), -500.0, 9.0), OverflowError);
}

TEST_CASE("ml_scalar reciprocity and monotonicity") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> alpha_d(0.05, 1.0), lam_d(-3.0, 3.0),
        t_d(-5.0, 5.0);
    for (int k = 0; k < 200; ++k) {
        FractionalOrder order(alpha_d(rng));
        const double lam = lam_d(rng), t = t_d(rng);
        CHECK(ml_scalar(order, lam, t) * ml_scalar(order, -lam, t) ==
              doctest::Approx(1.0).epsilon(1e-13));
    }
    FractionalOrder order(0.7);
    double prev = ml_scalar(order, 2.0, 0.0);
    for (double t = 0.25; t <= 4.0; t += 0.25) {
        const double cur = ml_scalar(order, 2.0, t);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("conformable derivative on the elementary table") {
    FractionalOrder half(0.5);
    // T^alpha t^p = p t^(p - alpha) at t = 4, p = 2: 2 * 4^1.5 = 16
    auto square = sig([](double t) { return t * t; });
    CHECK(conformable_derivative(half, square, 4.0, 1e-6) ==
          doctest::Approx(16.0).epsilon(1e-7));

    // constants have zero derivative
    auto constant = sig([](double) { return 3.25; });
    CHECK(conformable_derivative(FractionalOrder(0.7), constant, 1.3, 1e-6) ==
          doctest::Approx(0.0));

    // T^alpha sin(bt) = b |t|^(1-alpha) cos(bt): 2 cos(2) at t = 1
    auto wave = sig([](double t) { return std::sin(2.0 * t); });
    CHECK(conformable_derivative(half, wave, 1.0, 1e-6) ==
          doctest::Approx(-0.83229367309428477).epsilon(1e-7));

    // exponential: T^alpha e^{ct} = c |t|^{1-alpha} e^{ct}
    auto expo = sig([](double t) { return std::exp(0.5 * t); });
    CHECK(conformable_derivative(half, expo, 2.25, 1e-6) ==
          doctest::Approx(0.5 * std::pow(2.25, 0.5) * std::exp(1.125)).epsilon(1e-7));
}

TEST_CASE("conformable derivative limit clause at t = 0") {
    FractionalOrder half(0.5);
    auto square = sig([](double t) { return t * t; });
    CHECK(conformable_derivative(half, square, 0.0, 1e-4) ==
          doctest::Approx(0.0).epsilon(1e-6));
    auto f = sig([](double t) { return std::cos(t); });
    CHECK(conformable_derivative(half, f, 0.0, 1e-4) == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("conformable derivative domain errors") {
    auto narrow = sig([](double t) { return t; }, 0.0, 1.0);
    CHECK_THROWS_AS(conformable_derivative(FractionalOrder(0.5), narrow, 1.0, 1e-3),
                    DomainError);
    CHECK_THROWS_AS(conformable_derivative(FractionalOrder(0.5), narrow, 0.5, 0.0),
                    PreconditionError);
}

TEST_CASE("conformable integral closed forms") {
    FractionalOrder half(0.5);
    auto one = sig([](double) { return 1.0; });
    // I^alpha_0 1 = t^alpha / alpha = 2 at t = 1
    CHECK(conformable_integral(half, one, 0.0, 1.0, kQuad) ==
          doctest::Approx(2.0).epsilon(1e-10));

    // weight cancellation: f = |s|^{1-alpha} integrates to t - t0
    for (double alpha : {0.3, 0.5, 0.9}) {
        FractionalOrder order(alpha);
        auto cancel = sig([alpha](double s) { return std::pow(std::abs(s), 1.0 - alpha); });
        CHECK(conformable_integral(order, cancel, 1.0, 3.0, kQuad) ==
              doctest::Approx(2.0).epsilon(1e-10));
    }

    // I^0.5_0 s = integral of s^0.5 = 16/3 at t = 4
    auto ident = sig([](double s) { return s; });
    CHECK(conformable_integral(half, ident, 0.0, 4.0, kQuad) ==
          doctest::Approx(16.0 / 3.0).epsilon(1e-10));

    // orientation: swapping the limits flips the sign
    CHECK(conformable_integral(half, ident, 4.0, 0.0, kQuad) ==
          doctest::Approx(-16.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("conformable integral across zero splits at the singularity") {
    FractionalOrder order(0.4);
    auto one = sig([](double) { return 1.0; });
    // each half contributes |t|^alpha/alpha
    const double expected = 2.0 * std::pow(1.5, 0.4) / 0.4;
    CHECK(conformable_integral(order, one, -1.5, 1.5, kQuad) ==
          doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("conformable integral agrees with brute-force weighted quadrature") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> alpha_d(0.15, 1.0), a_d(0.2, 2.0),
        len_d(0.5, 3.0), c_d(-1.0, 1.0);
    for (int k = 0; k < 40; ++k) {
        FractionalOrder order(alpha_d(rng));
        const double c0 = c_d(rng), c1 = c_d(rng), c2 = c_d(rng);
        auto f = sig([=](double s) { return c0 + c1 * std::sin(s) + c2 * s * s; });
        const double t0 = a_d(rng);
        const double t1 = t0 + len_d(rng);
        const double via_substitution = conformable_integral(order, f, t0, t1, kQuad);
        const double direct = weighted_reference(order, f, t0, t1);
        CHECK(via_substitution == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("conformable integral reports quadrature failure") {
    FractionalOrder order(0.5);
    auto nasty = sig([](double s) { return std::sin(1000.0 * s * s); });
    QuadratureConfig tiny{1e-14, 1e-16, 1};
    CHECK_THROWS_AS(conformable_integral(order, nasty, 0.5, 9.5, tiny), ConvergenceError);
}

TEST_CASE("calculus properties A1-A4 on smooth signals") {
    FractionalOrder order(0.6);
    auto f = sig([](double t) { return std::sin(t) + 0.5 * t * t; });
    auto g = sig([](double t) { return std::cos(0.7 * t) + 2.0; });

    SUBCASE("inverse pair: derivative of the running integral returns f") {
        auto running = sig([&](double s) {
            return conformable_integral(order, f, 1.0, s, kQuad);
        }, -8.0, 8.0);
        for (double t : {1.5, 2.0, 3.3}) {
            CHECK(conformable_derivative(order, running, t, 1e-5) ==
                  doctest::Approx(f(t)).epsilon(1e-6));
        }
    }

    SUBCASE("integral of the derivative returns f - f(t0)") {
        auto deriv = sig([&](double s) {
            return conformable_derivative(order, f, s, 1e-6);
        }, -8.0, 8.0);
        const double got = conformable_integral(order, deriv, 1.0, 2.5, {1e-9, 1e-10, 40});
        CHECK(got == doctest::Approx(f(2.5) - f(1.0)).epsilon(1e-6));
    }

    SUBCASE("linearity") {
        auto combo = sig([&](double t) { return 2.0 * f(t) - 3.0 * g(t); });
        for (double t : {0.8, 1.7, 2.9}) {
            const double lhs = conformable_derivative(order, combo, t, 1e-5);
            const double rhs = 2.0 * conformable_derivative(order, f, t, 1e-5) -
                               3.0 * conformable_derivative(order, g, t, 1e-5);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
        }
    }

    SUBCASE("product rule") {
        auto prod = sig([&](double t) { return f(t) * g(t); });
        for (double t : {0.8, 1.7, 2.9}) {
            const double lhs = conformable_derivative(order, prod, t, 1e-5);
            const double rhs = f(t) * conformable_derivative(order, g, t, 1e-5) +
                               g(t) * conformable_derivative(order, f, t, 1e-5);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-7));
        }
    }

    SUBCASE("quotient rule") {
        auto quot = sig([&](double t) { return f(t) / g(t); });
        for (double t : {0.8, 1.7, 2.9}) {
            const double lhs = conformable_derivative(order, quot, t, 1e-5);
            const double rhs = (g(t) * conformable_derivative(order, f, t, 1e-5) -
                                f(t) * conformable_derivative(order, g, t, 1e-5)) /
                               (g(t) * g(t));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-7));
        }
    }

    SUBCASE("chain rule with the |g|^(alpha-1) factor") {
        // numeric probe on a smooth monotone inner function
        auto inner = sig([](double t) { return 1.0 + 0.5 * t; });
        auto comp = sig([&](double t) { return f(inner(t)); });
        for (double t : {0.9, 1.6, 2.4}) {
            const double lhs = conformable_derivative(order, comp, t, 1e-5);
            const double gt = inner(t);
            const double rhs = std::pow(std::abs(gt), order.value() - 1.0) *
                               conformable_derivative(order, f, gt, 1e-5) *
                               conformable_derivative(order, inner, t, 1e-5);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
        }
    }
}

TEST_CASE("gronwall bound closed forms") {
    SUBCASE("alpha = 1 reduces to the classical bound") {
        FractionalOrder one(1.0);
        auto a = sig([](double) { return 2.0; });
        auto f = sig([](double) { return 0.7; });
        const GronwallBound b = gronwall_bound(one, a, f, 0.5, 2.5, kQuad);
        CHECK(b.sharp == doctest::Approx(2.0 * std::exp(0.7 * 2.0)).epsilon(1e-10));
    }

    SUBCASE("alpha = 0.5 unit data gives exp(2)") {
        FractionalOrder half(0.5);
        auto one_sig = sig([](double) { return 1.0; });
        const GronwallBound b = gronwall_bound(half, one_sig, one_sig, 0.0, 1.0, kQuad);
        CHECK(b.sharp == doctest::Approx(7.3890560989306495).epsilon(1e-10));
    }

    SUBCASE("zero integrand returns a(t)") {
        FractionalOrder order(0.8);
        auto a = sig([](double t) { return 1.0 + t; });
        auto zero = sig([](double) { return 0.0; });
        const GronwallBound b = gronwall_bound(order, a, zero, 0.0, 3.0, kQuad);
        CHECK(b.sharp == doctest::Approx(4.0));
    }

    SUBCASE("sharp bound never exceeds the coarse bound") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> alpha_d(0.2, 1.0), c_d(0.1, 2.0);
        for (int k = 0; k < 30; ++k) {
            FractionalOrder order(alpha_d(rng));
            const double base = c_d(rng), rate = c_d(rng);
            auto a = sig([base](double t) { return base * (1.0 + 0.1 * t); });
            auto f = sig([rate](double t) { return rate * (1.5 + std::sin(t)) / 2.5; });
            const GronwallBound b = gronwall_bound(order, a, f, 0.2, 2.7, kQuad);
            CHECK(b.sharp <= b.coarse * (1.0 + 1e-12));
        }
    }

    SUBCASE("negative samples are rejected") {
        FractionalOrder order(0.5);
        auto a = sig([](double) { return 1.0; });
        auto neg = sig([](double t) { return t < 1.0 ? 1.0 : -0.5; });
        CHECK_THROWS_AS(gronwall_bound(order, a, neg, 0.0, 2.0, kQuad), PreconditionError);
    }
}
