#pragma once

#include "platoonrl/scenario.hpp"
#include "platoonrl/vehicle.hpp"

namespace prl {

/// Ego-free physical-room check for one deceleration pair: simulates only the
/// leading and following vehicles of the mean scenario (stds suppressed),
/// both braking from the scenario trigger step at the given decelerations.
/// Feasible iff at every step the lead-to-follow bumper gap leaves room for
/// the ego plus a collision-threshold margin on both sides.
inline bool feasibility_oracle(const ScenarioConfig& cfg, double d_lead, double d_follow) {
    if (d_lead > 0.0 || d_follow > 0.0) {
        throw std::domain_error("feasibility_oracle: decelerations must be <= 0");
    }
    VehicleState lead = make_vehicle(cfg.lead_class, cfg.lead_position.mean, cfg.initial_velocity);
    VehicleState follow = make_vehicle(cfg.rear_class, cfg.rear_position.mean, cfg.initial_velocity);
    const double ego_length = make_vehicle(cfg.mid_class, 0.0, 0.0).length;
    const double required = ego_length + 2.0 * cfg.collision_threshold;

    const double t_trigger = 0.5 * (cfg.lead_brake_time.lo + cfg.lead_brake_time.hi);
    const int trigger_step = static_cast<int>(std::ceil(t_trigger / cfg.dt - 1e-12));

    auto gap = [&]() {
        return (lead.position_x - follow.position_x) - 0.5 * (lead.length + follow.length);
    };

    if (gap() < required) return false;
    for (int k = 0; k < cfg.episode_max_steps; ++k) {
        const bool braking = k >= trigger_step;
        lead = step_vehicle(lead, braking ? d_lead : 0.0, cfg.dt);
        follow = step_vehicle(follow, braking ? d_follow : 0.0, cfg.dt);
        if (gap() < required) return false;
        if (lead.velocity == 0.0 && follow.velocity == 0.0) break;
    }
    return true;
}

}  // namespace prl
