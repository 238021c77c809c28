#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "platoonrl/vehicle.hpp"

namespace prl {

enum class RewardVariant { DistanceReward, FixedReward };

/// Piecewise reward constants. For every reachable non-collision state the
/// positivity constraints d_fm - c_fm + c1 > 0 and d_mr - c_mr + c2 > 0 must
/// hold; both penalty denominators stay positive on that region.
struct RewardParams {
    double c0_collision = -3000.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 10.0;
    double f_fm = 1.0;
    double f_mr = 1.0;
    double c_fm = 4.0; // m, bumper-gap convention: collision threshold + margin
    double c_mr = 4.0; // m
    RewardVariant variant = RewardVariant::DistanceReward;
};

struct EquilibriumResult {
    double x_star = 0.0;                    // m, optimal front gap
    double beta = 1.0;                      // sqrt(f_fm / f_mr)
    double second_derivative_at_x_star = 0; // penalty curvature, > 0
    double total_gap = 0.0;                 // D
};

/// Immediate reward of one transition.
inline double step_reward(const EnvState& s, const RewardParams& p, bool collided) {
    if (collided) return p.c0_collision;
    if (p.variant == RewardVariant::FixedReward) return p.c3;
    const double a = s.d_fm - p.c_fm + p.c1;
    const double b = s.d_mr - p.c_mr + p.c2;
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("step_reward: positivity constraint violated without collision");
    }
    return p.c3 - (p.f_fm / a + p.f_mr / b);
}

namespace detail {
inline void check_interval(double x, double total_gap, const RewardParams& p) {
    const double lo = p.c_fm - p.c1;
    const double hi = total_gap - p.c_mr + p.c2;
    if (!(lo < hi)) throw std::domain_error("penalty: empty positivity interval");
    if (!(x > lo) || !(x < hi)) throw std::domain_error("penalty: x outside positivity interval");
}
}  // namespace detail

/// Penalty f(x) = f_fm / A(x) + f_mr / B(x) with A = x - c_fm + c1 and
/// B = D - x - c_mr + c2, for a fixed lead-to-follow gap D split at x.
inline double penalty(double x, double total_gap, const RewardParams& p) {
    detail::check_interval(x, total_gap, p);
    const double a = x - p.c_fm + p.c1;
    const double b = total_gap - x - p.c_mr + p.c2;
    return p.f_fm / a + p.f_mr / b;
}

/// (f', f'') of the penalty. f'' > 0 everywhere on the positivity interval.
inline std::pair<double, double> penalty_derivatives(double x, double total_gap,
                                                     const RewardParams& p) {
    detail::check_interval(x, total_gap, p);
    const double a = x - p.c_fm + p.c1;
    const double b = total_gap - x - p.c_mr + p.c2;
    const double d1 = -p.f_fm / (a * a) + p.f_mr / (b * b);
    const double d2 = 2.0 * p.f_fm / (a * a * a) + 2.0 * p.f_mr / (b * b * b);
    return {d1, d2};
}

/// Closed-form gap split maximizing the non-collision reward between fixed
/// neighbors separated by D. beta = sqrt(f_fm / f_mr) is the orientation that
/// satisfies f'(x*) = 0 together with
/// x* = (beta (D - c_mr + c2) + c_fm - c1) / (1 + beta).
inline EquilibriumResult equilibrium_gap(double total_gap, const RewardParams& p) {
    const double lo = p.c_fm - p.c1;
    const double hi = total_gap - p.c_mr + p.c2;
    if (!(lo < hi)) throw std::domain_error("equilibrium_gap: empty positivity interval");
    if (!(p.f_fm > 0.0) || !(p.f_mr > 0.0)) {
        throw std::domain_error("equilibrium_gap: factors must be positive");
    }
    EquilibriumResult r;
    r.total_gap = total_gap;
    r.beta = std::sqrt(p.f_fm / p.f_mr);
    r.x_star = (r.beta * (total_gap - p.c_mr + p.c2) + p.c_fm - p.c1) / (1.0 + r.beta);
    r.second_derivative_at_x_star = penalty_derivatives(r.x_star, total_gap, p).second;
    return r;
}

/// R = sum_{t=1..T} gamma^t r_t; the discount applies to the first step too.
inline double discounted_return(std::span<const double> rewards, double gamma) {
    double total = 0.0;
    double g = 1.0;
    for (double r : rewards) {
        g *= gamma;
        total += g * r;
    }
    return total;
}

}  // namespace prl
