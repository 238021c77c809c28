#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "platoonrl/rng.hpp"
#include "platoonrl/vehicle.hpp"

namespace prl {

struct NormalDist {
    double mean = 0.0;
    double std = 0.0;
};

struct UniformDist {
    double lo = 0.0;
    double hi = 0.0;
};

enum class InsertRole { BecomesLeading, BecomesFollowing };

/// Instantaneous lane insertion at the median position/velocity of the two
/// vehicles that end up bracketing the newcomer.
struct CutInConfig {
    int trigger_step = 100;
    InsertRole insert_role = InsertRole::BecomesFollowing;
    VClass vclass = VClass::Heavy;
};

/// The three-vehicle stochastic scenario: normally distributed initial
/// positions, a scripted lead emergency brake, a TTC-triggered follower AEB,
/// and small per-step acceleration jitter on non-ego vehicles.
struct ScenarioConfig {
    double dt = 0.05;
    int episode_max_steps = 1500;
    double collision_threshold = 2.0;
    double initial_velocity = 20.0;

    NormalDist lead_position{36.0, 0.5};
    NormalDist mid_position{18.0, 0.5};
    NormalDist rear_position{0.0, 0.5};

    NormalDist lead_brake_decel{-7.5, 0.2};
    UniformDist lead_brake_time{1.0, 1.5};
    NormalDist follow_brake_decel{-4.0, 0.2};
    double follow_ttc_threshold = 1.4;

    NormalDist jitter_accel{0.0, 0.01};

    // Fraction of episodes where the lead never brakes; keeps steady cruising
    // inside the training distribution.
    double no_brake_prob = 0.0;

    VClass lead_class = VClass::Light;
    VClass mid_class = VClass::Light;
    VClass rear_class = VClass::Light;

    std::optional<CutInConfig> cutin;

    // Kalman parameters used by TTC followers and baseline observers.
    double kf_jerk_psd = 5.0;
    double kf_meas_var = 0.04;
};

/// One reproducible draw of a scenario. step index k corresponds to time
/// k * dt; the lead brake activates at the first step whose time is >= t_f.
struct ScenarioInstance {
    ScenarioConfig cfg;
    double x_lead = 36.0;
    double x_mid = 18.0;
    double x_rear = 0.0;
    bool lead_brakes = true;
    double lead_brake_decel = -7.5;
    int lead_brake_step = 25;
    double follow_brake_decel = -4.0;
    std::uint64_t jitter_seed = 0;
};

inline ScenarioInstance sample_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    if (cfg.episode_max_steps < 1 || !(cfg.dt > 0.0)) {
        throw std::domain_error("sample_scenario: invalid config");
    }
    if (cfg.lead_position.std < 0.0 || cfg.mid_position.std < 0.0 ||
        cfg.rear_position.std < 0.0 || cfg.lead_brake_time.lo > cfg.lead_brake_time.hi) {
        throw std::domain_error("sample_scenario: invalid distributions");
    }
    Rng rng(Rng::derive(seed, {0x5ce0u}));
    ScenarioInstance inst;
    inst.cfg = cfg;

    // positions must be strictly ordered front to back; redraw if violated
    bool ordered = false;
    for (int attempt = 0; attempt < 100 && !ordered; ++attempt) {
        inst.x_lead = rng.normal(cfg.lead_position.mean, cfg.lead_position.std);
        inst.x_mid = rng.normal(cfg.mid_position.mean, cfg.mid_position.std);
        inst.x_rear = rng.normal(cfg.rear_position.mean, cfg.rear_position.std);
        ordered = inst.x_lead > inst.x_mid && inst.x_mid > inst.x_rear;
    }
    if (!ordered) {
        throw std::domain_error("sample_scenario: could not order initial positions in 100 draws");
    }

    inst.lead_brakes = !(cfg.no_brake_prob > 0.0 && rng.uniform01() < cfg.no_brake_prob);
    inst.lead_brake_decel = rng.normal(cfg.lead_brake_decel.mean, cfg.lead_brake_decel.std);
    if (inst.lead_brake_decel > 0.0) inst.lead_brake_decel = 0.0;
    const double t_f = rng.uniform(cfg.lead_brake_time.lo, cfg.lead_brake_time.hi);
    inst.lead_brake_step = static_cast<int>(std::ceil(t_f / cfg.dt - 1e-12));
    inst.follow_brake_decel = rng.normal(cfg.follow_brake_decel.mean, cfg.follow_brake_decel.std);
    if (inst.follow_brake_decel > 0.0) inst.follow_brake_decel = 0.0;
    inst.jitter_seed = Rng::derive(seed, {0x71e7u});
    return inst;
}

}  // namespace prl
