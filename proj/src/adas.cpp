#include "platoonrl/adas.hpp"

namespace prl {

BaselineRunResult run_baseline_scenario(const ScenarioInstance& inst,
                                        const BaselineParams& params) {
    Platoon p = make_platoon(inst);
    Rng jitter(inst.jitter_seed);
    BaselineController ego(params, inst.cfg.initial_velocity, inst.cfg.kf_jerk_psd,
                           inst.cfg.kf_meas_var);
    BaselineRunResult out;
    std::vector<Event> events;

    for (int k = 0; k < inst.cfg.episode_max_steps; ++k) {
        const double cmd[1] = {ego.command(p, p.ego_index())};
        events.clear();
        step_platoon(p, inst, cmd, jitter, &events);
        out.steps = k + 1;
        const CollisionReport rep = detect_collision(p, inst.cfg.collision_threshold);
        if (rep.occurred) {
            out.collision = rep;
            break;
        }
        if (all_stopped(p)) {
            out.all_stopped_at_end = true;
            break;
        }
    }
    auto [d_fm, d_mr] = compute_gaps(p, p.ego_index());
    out.final_d_fm = d_fm;
    out.final_d_mr = d_mr;
    return out;
}

}  // namespace prl
