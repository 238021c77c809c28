#pragma once

#include <stdexcept>

#include "platoonrl/kalman.hpp"
#include "platoonrl/platoon.hpp"

namespace prl {

/// Constant-velocity ACC cruise plus TTC-triggered AEB at the FHWA emergency
/// deceleration.
struct BaselineParams {
    double ttc_threshold = 1.4; // s, strict less-than triggers
    double aeb_decel = -7.5;    // m/s^2, clamped to the vehicle's own limit
    double cruise_gain = 0.5;   // 1/s, proportional velocity hold
    double cruise_accel_cap = 1.0; // m/s^2, |cruise command| bound
};

/// gap / closing speed; an opening or steady gap reports +infinity.
inline double compute_ttc(double gap, double v_rear, double v_front) {
    if (!(gap > 0.0)) throw std::domain_error("compute_ttc: gap must be positive");
    const double closing = v_rear - v_front;
    if (closing <= 0.0) return std::numeric_limits<double>::infinity();
    return gap / closing;
}

/// Stateless step rule: AEB below the TTC threshold, velocity-hold otherwise.
inline double baseline_action(double gap_front, double own_velocity, double front_velocity,
                              double v_set, const BaselineParams& p, double vehicle_max_decel) {
    if (gap_front > 0.0) {
        const double ttc = compute_ttc(gap_front, own_velocity, front_velocity);
        if (ttc < p.ttc_threshold) {
            return std::max(p.aeb_decel, vehicle_max_decel);
        }
    }
    const double cruise = p.cruise_gain * (v_set - own_velocity);
    return std::clamp(cruise, -p.cruise_accel_cap, p.cruise_accel_cap);
}

/// Per-episode baseline ego: Kalman track of the front vehicle (Algorithm-1
/// style velocity prediction), AEB latched until the vehicle stops, ACC
/// velocity hold otherwise.
class BaselineController {
public:
    BaselineController() = default;
    BaselineController(const BaselineParams& params, double v_set, double jerk_psd, double meas_var)
        : params_(params), v_set_(v_set), front_track_(jerk_psd, meas_var) {}

    double command(const Platoon& p, int ego_index) {
        const Vehicle& me = p.vehicles[ego_index];
        if (latched_) {
            if (me.state.velocity > 0.0) {
                return std::max(params_.aeb_decel, me.state.max_decel);
            }
            latched_ = false; // released at standstill
        }
        if (ego_index == 0) {
            // nothing ahead, plain cruise
            const double cruise = params_.cruise_gain * (v_set_ - me.state.velocity);
            return std::clamp(cruise, -params_.cruise_accel_cap, params_.cruise_accel_cap);
        }
        const VehicleState& front = p.vehicles[ego_index - 1].state;
        const double gap = bumper_gap(p, ego_index - 1, ego_index);
        const double front_center =
            me.state.position_x + gap + 0.5 * (front.length + me.state.length);
        front_track_.observe(front_center, p.dt, me.state.velocity);

        if (gap > 0.0) {
            const double ttc = compute_ttc(gap, me.state.velocity, front_track_.velocity());
            if (ttc < params_.ttc_threshold) {
                latched_ = true;
                return std::max(params_.aeb_decel, me.state.max_decel);
            }
        }
        const double cruise = params_.cruise_gain * (v_set_ - me.state.velocity);
        return std::clamp(cruise, -params_.cruise_accel_cap, params_.cruise_accel_cap);
    }

    bool latched() const { return latched_; }

private:
    BaselineParams params_;
    double v_set_ = 20.0;
    NeighborTracker front_track_;
    bool latched_ = false;
};

struct BaselineRunResult {
    CollisionReport collision;
    int steps = 0;
    bool all_stopped_at_end = false;
    double final_d_fm = kNoNeighborGap;
    double final_d_mr = kNoNeighborGap;
};

/// Runs a scenario instance with the baseline controller in the ego seat.
/// The run ends on collision, when every vehicle has stopped, or at the step
/// cap.
BaselineRunResult run_baseline_scenario(const ScenarioInstance& inst, const BaselineParams& params);

}  // namespace prl
