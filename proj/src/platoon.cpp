#include "platoonrl/platoon.hpp"

#include <algorithm>
#include <cmath>

namespace prl {

Platoon make_platoon(const ScenarioInstance& inst) {
    Platoon p;
    p.dt = inst.cfg.dt;
    p.time_step = 0;

    Vehicle lead;
    lead.state = make_vehicle(inst.cfg.lead_class, inst.x_lead, inst.cfg.initial_velocity);
    lead.role = RoleKind::ScriptedLead;
    lead.brake_decel = inst.lead_brake_decel;
    lead.cruise_velocity = inst.cfg.initial_velocity;

    Vehicle ego;
    ego.state = make_vehicle(inst.cfg.mid_class, inst.x_mid, inst.cfg.initial_velocity);
    ego.role = RoleKind::External;

    Vehicle rear;
    rear.state = make_vehicle(inst.cfg.rear_class, inst.x_rear, inst.cfg.initial_velocity);
    rear.role = RoleKind::TtcFollower;
    rear.brake_decel = inst.follow_brake_decel;
    rear.cruise_velocity = inst.cfg.initial_velocity;
    rear.front_track = NeighborTracker(inst.cfg.kf_jerk_psd, inst.cfg.kf_meas_var);

    p.vehicles = {lead, ego, rear};
    p.rl_indices = {1};
    return p;
}

namespace {

void insert_cutin(Platoon& p, const ScenarioInstance& inst, std::vector<Event>* events) {
    const CutInConfig& cc = *inst.cfg.cutin;
    const int ego = p.ego_index();
    int front, rear;
    if (cc.insert_role == InsertRole::BecomesLeading) {
        if (ego <= 0) return; // nothing ahead to slot behind
        front = ego - 1;
        rear = ego;
    } else {
        if (ego + 1 >= p.size()) return;
        front = ego;
        rear = ego + 1;
    }
    Vehicle v;
    const VehicleState& f = p.vehicles[front].state;
    const VehicleState& r = p.vehicles[rear].state;
    v.state = make_vehicle(cc.vclass, 0.5 * (f.position_x + r.position_x),
                           0.5 * (f.velocity + r.velocity));
    v.role = RoleKind::TtcFollower;
    v.brake_decel = v.state.max_decel; // cut-in AEBs at its own physical limit
    v.cruise_velocity = v.state.velocity;
    v.front_track = NeighborTracker(inst.cfg.kf_jerk_psd, inst.cfg.kf_meas_var);

    const int slot = rear;
    p.vehicles.insert(p.vehicles.begin() + slot, v);
    for (int& idx : p.rl_indices) {
        if (idx >= slot) ++idx;
    }
    // a newly interposed vehicle invalidates the follower's track of its old front
    if (slot + 1 < p.size()) p.vehicles[slot + 1].front_track.reset();
    if (events) events->push_back({EventKind::CutIn, p.time_step, slot, v.state.position_x});
}

double scripted_command(Vehicle& v, const ScenarioInstance& inst, int step, double jitter,
                        std::vector<Event>* events, int index) {
    if (v.role == RoleKind::ScriptedLead && !v.brake_latched && inst.lead_brakes &&
        step >= inst.lead_brake_step && v.brake_decel < 0.0) {
        v.brake_latched = true;
        if (events) events->push_back({EventKind::BrakeTriggered, step, index, v.brake_decel});
    }
    if (v.brake_latched) {
        return v.state.velocity > 0.0 ? v.brake_decel : 0.0;
    }
    return jitter;
}

double ttc_follower_command(Platoon& p, int index, const ScenarioInstance& inst, double jitter,
                            std::vector<Event>* events) {
    Vehicle& v = p.vehicles[index];
    if (index == 0) {
        // promoted to platoon head with nobody ahead: plain cruise
        return v.brake_latched ? (v.state.velocity > 0.0 ? v.brake_decel : 0.0) : jitter;
    }
    const VehicleState& front = p.vehicles[index - 1].state;
    const double gap = bumper_gap(p, index - 1, index);
    const double front_center = v.state.position_x + gap + 0.5 * (front.length + v.state.length);
    v.front_track.observe(front_center, p.dt, v.state.velocity);

    if (!v.brake_latched && gap > 0.0) {
        const double closing = v.state.velocity - v.front_track.velocity();
        if (closing > 0.0 && gap / closing < inst.cfg.follow_ttc_threshold) {
            v.brake_latched = true;
            if (events) {
                events->push_back({EventKind::BrakeTriggered, p.time_step, index, v.brake_decel});
            }
        }
    }
    if (v.brake_latched) {
        return v.state.velocity > 0.0 ? std::max(v.brake_decel, v.state.max_decel) : 0.0;
    }
    return jitter;
}

}  // namespace

void step_platoon(Platoon& p, const ScenarioInstance& inst,
                  std::span<const double> external_accels, Rng& jitter_rng,
                  std::vector<Event>* events) {
    if (external_accels.size() != p.rl_indices.size()) {
        throw std::domain_error("step_platoon: one command required per RL vehicle");
    }
    if (inst.cfg.cutin && p.time_step == inst.cfg.cutin->trigger_step) {
        insert_cutin(p, inst, events);
    }

    std::vector<double> commands(p.vehicles.size(), 0.0);
    std::size_t ext = 0;
    for (int i = 0; i < p.size(); ++i) {
        Vehicle& v = p.vehicles[i];
        switch (v.role) {
            case RoleKind::External:
                commands[i] = external_accels[ext++];
                break;
            case RoleKind::ScriptedLead: {
                const double jitter =
                    jitter_rng.normal(inst.cfg.jitter_accel.mean, inst.cfg.jitter_accel.std);
                commands[i] = scripted_command(v, inst, p.time_step, jitter, events, i);
                break;
            }
            case RoleKind::TtcFollower: {
                const double jitter =
                    jitter_rng.normal(inst.cfg.jitter_accel.mean, inst.cfg.jitter_accel.std);
                commands[i] = ttc_follower_command(p, i, inst, jitter, events);
                break;
            }
        }
    }

    for (int i = 0; i < p.size(); ++i) {
        p.vehicles[i].state = step_vehicle(p.vehicles[i].state, commands[i], p.dt);
    }
    p.time_step += 1;

    if (events) {
        const CollisionReport rep = detect_collision(p, inst.cfg.collision_threshold);
        if (rep.occurred) {
            events->push_back({EventKind::Collision, p.time_step, rep.rear_index, rep.gap_at_event});
        }
    }
}

EnvState EgoObserver::observe(const Platoon& p, int ego) {
    EnvState s;
    const VehicleState& me = p.vehicles[ego].state;
    auto [d_fm, d_mr] = compute_gaps(p, ego);
    s.d_fm = d_fm;
    s.d_mr = d_mr;
    s.v_m = me.velocity;
    s.a_m = me.acceleration;

    const bool has_front = ego > 0;
    const bool has_rear = ego + 1 < p.size();

    if (!use_estimator_) {
        s.v_f = has_front ? p.vehicles[ego - 1].state.velocity : me.velocity;
        s.a_f = has_front ? p.vehicles[ego - 1].state.acceleration : 0.0;
        s.v_r = has_rear ? p.vehicles[ego + 1].state.velocity : me.velocity;
        s.a_r = has_rear ? p.vehicles[ego + 1].state.acceleration : 0.0;
        return s;
    }

    if (has_front) {
        const VehicleState& f = p.vehicles[ego - 1].state;
        front_.observe(me.position_x + d_fm + 0.5 * (f.length + me.length), p.dt, me.velocity);
        s.v_f = front_.velocity();
        s.a_f = front_.acceleration();
    } else {
        s.v_f = me.velocity;
        s.a_f = 0.0;
    }
    if (has_rear) {
        const VehicleState& r = p.vehicles[ego + 1].state;
        rear_.observe(me.position_x - d_mr - 0.5 * (r.length + me.length), p.dt, me.velocity);
        s.v_r = rear_.velocity();
        s.a_r = rear_.acceleration();
    } else {
        s.v_r = me.velocity;
        s.a_r = 0.0;
    }
    return s;
}

}  // namespace prl
