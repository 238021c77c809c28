#pragma once

#include <optional>
#include <vector>

#include "platoonrl/kalman.hpp"
#include "platoonrl/rng.hpp"
#include "platoonrl/scenario.hpp"
#include "platoonrl/vehicle.hpp"

namespace prl {

/// Who commands a vehicle each step.
///  - External: acceleration supplied by the caller (RL policy or baseline ego)
///  - ScriptedLead: cruises with jitter, then brakes at the sampled decel
///  - TtcFollower: cruises with jitter, latches AEB when TTC to its front
///    vehicle (from its Kalman track) drops below the threshold
enum class RoleKind { External, ScriptedLead, TtcFollower };

struct CollisionReport {
    bool occurred = false;
    int front_index = -1;
    int rear_index = -1;
    double gap_at_event = 0.0;
    int step = -1;
};

enum class EventKind { BrakeTriggered, CutIn, Collision };

struct Event {
    EventKind kind;
    int step = 0;
    int vehicle_index = -1;
    double value = 0.0;
};

struct Vehicle {
    VehicleState state;
    RoleKind role = RoleKind::TtcFollower;
    bool brake_latched = false;
    double brake_decel = 0.0; // used once latched (scripted lead or AEB)
    double cruise_velocity = 0.0;
    NeighborTracker front_track;
};

struct Platoon {
    std::vector<Vehicle> vehicles; // index 0 = leading
    std::vector<int> rl_indices;   // externally commanded vehicles, ascending
    int time_step = 0;
    double dt = 0.05;

    int ego_index() const { return rl_indices.empty() ? -1 : rl_indices.front(); }
    int size() const { return static_cast<int>(vehicles.size()); }
};

/// Bumper-to-bumper gap between adjacent vehicles (front at index i).
inline double bumper_gap(const Platoon& p, int front, int rear) {
    const VehicleState& f = p.vehicles[front].state;
    const VehicleState& r = p.vehicles[rear].state;
    return (f.position_x - r.position_x) - 0.5 * (f.length + r.length);
}

/// (d_fm, d_mr) for the vehicle at `ego`; a missing neighbor reports +inf.
inline std::pair<double, double> compute_gaps(const Platoon& p, int ego) {
    const double d_fm = ego > 0 ? bumper_gap(p, ego - 1, ego) : kNoNeighborGap;
    const double d_mr = ego + 1 < p.size() ? bumper_gap(p, ego, ego + 1) : kNoNeighborGap;
    return {d_fm, d_mr};
}

/// First adjacent pair (scanning front to back) whose bumper gap is below the
/// threshold.
inline CollisionReport detect_collision(const Platoon& p, double threshold) {
    if (threshold < 0.0) throw std::domain_error("detect_collision: negative threshold");
    CollisionReport rep;
    for (int i = 0; i + 1 < p.size(); ++i) {
        const double g = bumper_gap(p, i, i + 1);
        if (g < threshold) {
            rep.occurred = true;
            rep.front_index = i;
            rep.rear_index = i + 1;
            rep.gap_at_event = g;
            rep.step = p.time_step;
            return rep;
        }
    }
    return rep;
}

/// Builds the initial three-vehicle platoon of a scenario instance with the
/// externally commanded ego in the middle.
Platoon make_platoon(const ScenarioInstance& inst);

/// Applies scripted events (lead brake trigger, cut-in insertion), jitter to
/// non-ego vehicles, external commands to RL vehicles, then advances every
/// vehicle by dt. `external_accels` holds one command per entry of
/// rl_indices, in order. Events that fired this step are appended to
/// `events`.
void step_platoon(Platoon& p, const ScenarioInstance& inst,
                  std::span<const double> external_accels, Rng& jitter_rng,
                  std::vector<Event>* events = nullptr);

/// True when every vehicle is fully stopped (the scenario has resolved).
inline bool all_stopped(const Platoon& p) {
    for (const auto& v : p.vehicles) {
        if (v.state.velocity > 0.0) return false;
    }
    return true;
}

/// Observation front end for one externally commanded vehicle. Gaps are read
/// directly; neighbor velocity/acceleration either come from simulator ground
/// truth or from constant-acceleration Kalman tracks over the gap history.
/// Own velocity/acceleration are always ground truth.
class EgoObserver {
public:
    EgoObserver() = default;
    EgoObserver(bool use_estimator, double jerk_psd, double meas_var)
        : use_estimator_(use_estimator),
          front_(jerk_psd, meas_var),
          rear_(jerk_psd, meas_var) {}

    EnvState observe(const Platoon& p, int ego);

private:
    bool use_estimator_ = false;
    NeighborTracker front_;
    NeighborTracker rear_;
};

}  // namespace prl
