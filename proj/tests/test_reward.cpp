#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "oracles.hpp"
#include "platoonrl/reward.hpp"
#include "platoonrl/rng.hpp"

using namespace prl;

namespace {

RewardParams worked_example_params() {
    RewardParams p;
    p.f_fm = 1.0;
    p.f_mr = 1.0;
    p.c_fm = 7.0;
    p.c_mr = 7.0;
    p.c1 = 1.0;
    p.c2 = 1.0;
    p.c3 = 10.0;
    return p;
}

}  // namespace

TEST_CASE("step_reward: collision returns c0") {
    EnvState s;
    RewardParams p;
    CHECK(step_reward(s, p, true) == doctest::Approx(-3000.0));
}

TEST_CASE("step_reward: distance variant worked example") {
    RewardParams p = worked_example_params();
    EnvState s;
    s.d_fm = 16.0;
    s.d_mr = 16.0;
    CHECK(step_reward(s, p, false) == doctest::Approx(9.8).epsilon(1e-12));
}

TEST_CASE("step_reward: fixed variant returns c3") {
    RewardParams p;
    p.variant = RewardVariant::FixedReward;
    EnvState s;
    s.d_fm = 5.0;
    s.d_mr = 5.0;
    CHECK(step_reward(s, p, false) == doctest::Approx(10.0));
}

TEST_CASE("step_reward: positivity violation errors") {
    RewardParams p = worked_example_params();
    EnvState s;
    s.d_fm = 5.0; // 5 - 7 + 1 < 0
    s.d_mr = 16.0;
    CHECK_THROWS_AS(step_reward(s, p, false), std::domain_error);
}

TEST_CASE("penalty: worked example and symmetry") {
    RewardParams p = worked_example_params();
    p.f_fm = 4.0;
    CHECK(penalty(18.0, 30.0, p) == doctest::Approx(0.5).epsilon(1e-12));

    RewardParams sym = worked_example_params();
    const double d = 30.0;
    CHECK(penalty(d / 2.0, d, sym) == doctest::Approx(2.0 / (d / 2.0 - 7.0 + 1.0)).epsilon(1e-12));

    CHECK_THROWS_AS(penalty(6.0, 30.0, sym), std::domain_error);

    // blows up monotonically toward the interval edge
    double prev = penalty(7.0, d, sym);
    for (double x = 6.9; x > 6.05; x -= 0.1) {
        const double v = penalty(x, d, sym);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("penalty_derivatives: stationarity, positivity, finite differences") {
    RewardParams p = worked_example_params();
    p.f_fm = 4.0;
    auto [d1, d2] = penalty_derivatives(18.0, 30.0, p);
    CHECK(d1 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d2 > 0.0);

    RewardParams sym = worked_example_params();
    auto [s1, s2] = penalty_derivatives(15.0, 30.0, sym);
    CHECK(s1 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(s2 > 0.0);

    // gradient consistency against central differences, h = 1e-5
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        RewardParams q;
        q.f_fm = rng.uniform(0.2, 5.0);
        q.f_mr = rng.uniform(0.2, 5.0);
        q.c_fm = rng.uniform(2.0, 8.0);
        q.c_mr = rng.uniform(2.0, 8.0);
        q.c1 = rng.uniform(0.5, 2.0);
        q.c2 = rng.uniform(0.5, 2.0);
        const double d = rng.uniform(25.0, 60.0);
        const double lo = q.c_fm - q.c1, hi = d - q.c_mr + q.c2;
        const double x = rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo));
        auto [g1, g2] = penalty_derivatives(x, d, q);
        auto f = [&](double xx) { return penalty(xx, d, q); };
        const double fd1 = oracle::central_diff(f, x, 1e-5);
        const double fd2 = oracle::central_diff([&](double xx) {
            return penalty_derivatives(xx, d, q).first;
        }, x, 1e-5);
        CHECK(g1 == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(g2 == doctest::Approx(fd2).epsilon(1e-6));
        CHECK(g2 > 0.0);
    }
}

TEST_CASE("equilibrium_gap: symmetry and the beta = 2 worked example") {
    RewardParams sym = worked_example_params();
    const EquilibriumResult r = equilibrium_gap(30.0, sym);
    CHECK(r.beta == doctest::Approx(1.0));
    CHECK(r.x_star == doctest::Approx(15.0).epsilon(1e-12));

    RewardParams p = worked_example_params();
    p.f_fm = 4.0; // beta = 2
    const EquilibriumResult q = equilibrium_gap(30.0, p);
    CHECK(q.beta == doctest::Approx(2.0));
    CHECK(q.x_star == doctest::Approx(18.0).epsilon(1e-12));
    CHECK(q.second_derivative_at_x_star > 0.0);

    // golden-section localizes the minimum to value-resolution ...
    auto pen = [&](double x) {
        return oracle::penalty_formula(x, 30.0, p.f_fm, p.f_mr, p.c_fm, p.c_mr, p.c1, p.c2);
    };
    const double lo = p.c_fm - p.c1, hi = 30.0 - p.c_mr + p.c2;
    const double xmin = oracle::grid_golden_argmin(pen, lo + 1e-9, hi - 1e-9);
    CHECK(std::abs(xmin - q.x_star) < 1e-6);
    // ... and slope-sign bisection pins it to 1e-9
    auto slope = [&](double x) {
        return oracle::penalty_slope_formula(x, 30.0, p.f_fm, p.f_mr, p.c_fm, p.c_mr, p.c1, p.c2);
    };
    const double xbis = oracle::bisect_sign_change(slope, lo + 1e-9, hi - 1e-9);
    CHECK(std::abs(xbis - q.x_star) < 1e-9);

    RewardParams empty = worked_example_params();
    CHECK_THROWS_AS(equilibrium_gap(1.0, empty), std::domain_error);
}

TEST_CASE("equilibrium_gap: matches the numerical argmin over 100 random draws") {
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        RewardParams p;
        p.f_fm = rng.uniform(0.1, 8.0);
        p.f_mr = rng.uniform(0.1, 8.0);
        p.c_fm = rng.uniform(2.0, 9.0);
        p.c_mr = rng.uniform(2.0, 9.0);
        p.c1 = rng.uniform(0.3, 2.5);
        p.c2 = rng.uniform(0.3, 2.5);
        const double d = rng.uniform(25.0, 80.0);
        const EquilibriumResult r = equilibrium_gap(d, p);
        auto pen = [&](double x) {
            return oracle::penalty_formula(x, d, p.f_fm, p.f_mr, p.c_fm, p.c_mr, p.c1, p.c2);
        };
        const double lo = p.c_fm - p.c1, hi = d - p.c_mr + p.c2;
        const double xmin = oracle::grid_golden_argmin(pen, lo + 1e-9, hi - 1e-9);
        CHECK(std::abs(xmin - r.x_star) < 1e-6);
        CHECK(r.second_derivative_at_x_star > 0.0);
        CHECK(r.x_star > lo);
        CHECK(r.x_star < hi);
    }
}

TEST_CASE("reward properties: convexity, monotonicity, scale invariance") {
    Rng rng(31);
    // convexity over 1000 random draws
    for (int i = 0; i < 1000; ++i) {
        RewardParams p;
        p.f_fm = rng.uniform(0.1, 8.0);
        p.f_mr = rng.uniform(0.1, 8.0);
        p.c_fm = rng.uniform(2.0, 9.0);
        p.c_mr = rng.uniform(2.0, 9.0);
        const double d = rng.uniform(25.0, 80.0);
        const double lo = p.c_fm - p.c1, hi = d - p.c_mr + p.c2;
        const double x = rng.uniform(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo));
        CHECK(penalty_derivatives(x, d, p).second > 0.0);
    }

    // reward strictly increases below x*, strictly decreases above
    RewardParams p = worked_example_params();
    p.f_fm = 4.0;
    const double d = 30.0;
    const double x_star = equilibrium_gap(d, p).x_star;
    double prev = -1e18;
    for (double x = 6.5; x < x_star; x += 0.25) {
        const double r = p.c3 - penalty(x, d, p);
        CHECK(r > prev);
        prev = r;
    }
    prev = 1e18;
    for (double x = x_star + 0.25; x < 23.5; x += 0.25) {
        const double r = p.c3 - penalty(x, d, p);
        CHECK(r < prev);
        prev = r;
    }

    // common scaling of f_fm, f_mr leaves x* unchanged
    RewardParams scaled = p;
    scaled.f_fm *= 7.3;
    scaled.f_mr *= 7.3;
    CHECK(equilibrium_gap(d, scaled).x_star == doctest::Approx(x_star).epsilon(1e-14));
}

TEST_CASE("discounted_return: discount applies to the first step") {
    const std::vector<double> ones5 = {1, 1, 1, 1, 1};
    CHECK(discounted_return(ones5, 1.0) == doctest::Approx(5.0));
    const std::vector<double> ones3 = {1, 1, 1};
    CHECK(discounted_return(ones3, 0.5) == doctest::Approx(0.875).epsilon(1e-15));
    CHECK(discounted_return(std::vector<double>{}, 0.9) == 0.0);
}
