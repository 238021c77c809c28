#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "platoonrl/mlp.hpp"
#include "platoonrl/platoon.hpp"
#include "platoonrl/replay.hpp"
#include "platoonrl/reward.hpp"
#include "platoonrl/scenario.hpp"

namespace prl {

/// Fixed affine observation scaling baked into the checkpoint. Distances are
/// clipped before scaling so a missing-neighbor sentinel stays finite.
struct ObsNormalizer {
    double dist_scale = 50.0;
    double vel_scale = 30.0;
    double acc_scale = 7.5;
    double dist_clip = 200.0;

    void fill(const EnvState& s, double* col) const {
        col[0] = std::min(s.d_fm, dist_clip) / dist_scale;
        col[1] = std::min(s.d_mr, dist_clip) / dist_scale;
        col[2] = s.v_f / vel_scale;
        col[3] = s.v_m / vel_scale;
        col[4] = s.v_r / vel_scale;
        col[5] = s.a_f / acc_scale;
        col[6] = s.a_m / acc_scale;
        col[7] = s.a_r / acc_scale;
    }
};

/// Asymmetric tanh squash a = center + radius * tanh(u). The actor's output
/// bias is preset to atanh(-center/radius) so a freshly initialized policy
/// emits accelerations near zero.
struct ActionSquash {
    double a_min = -7.5;
    double a_max = 3.0;

    double center() const { return 0.5 * (a_min + a_max); }
    double radius() const { return 0.5 * (a_max - a_min); }
    double neutral_bias() const { return std::atanh(-center() / radius()); }
    double to_action(double y) const { return center() + radius() * y; }
};

struct TrainingConfig {
    int max_episodes = 2500;
    int episode_steps = 1500;
    double actor_lr = 0.001;
    double critic_lr = 0.002;
    int batch = 512;
    int memory = 10000;
    int warmup_transitions = 1000;
    double gamma = 0.99999;
    double tau = 0.005;
    double weight_decay = 0.0;
    double noise_initial = 1.0;
    double noise_decay = 0.999;
    double noise_floor = 0.05;
    double reward_scale = 0.01; // rewards scaled for regression, unscaled in logs
    int seed_lo = 20;
    int seed_hi = 49;
    int eval_every = 25;      // episodes between checkpoint evaluations
    int eval_scenarios = 24;  // deceleration pairs per evaluation
    int early_stop_perfect = 0; // stop a seed after this many consecutive perfect evals (0 = off)
    bool truncate_on_stop = true;
    double a_min = -7.5;
    double a_max = 3.0;

    ScenarioConfig scenario;
    RewardParams reward;

    // provenance recorded into checkpoints
    std::string config_text;
    std::uint64_t config_hash = 0;
};

struct EpisodeStats {
    double return_total = 0.0; // paper discounting, unscaled rewards
    int steps = 0;
    bool collided = false;
    bool truncated_on_stop = false;
    double min_d_fm = kNoNeighborGap;
    double min_d_mr = kNoNeighborGap;
};

/// Actor-critic pair with targets, optimizers and the scaling constants
/// required to reproduce the exact policy later.
class Agent {
public:
    static Agent fresh(std::uint64_t seed, const TrainingConfig& cfg);

    double act(const EnvState& s, double noise_std, Rng& rng) const;
    double act_deterministic(const EnvState& s) const;
    /// Deterministic actions for a batch of states (8 x n columns).
    Eigen::VectorXd act_batch(const Eigen::MatrixXd& states) const;

    /// Bellman regression targets y = r + gamma (1 - done) Q'(s', mu'(s')).
    Eigen::VectorXd critic_targets(const std::vector<const Transition*>& batch) const;

    double update_critic(const std::vector<const Transition*>& batch);
    double update_actor(const std::vector<const Transition*>& batch);
    void soft_update_targets();

    void save(std::ostream& os) const;
    static Agent load(std::istream& is);
    void save_file(const std::string& path) const;
    static Agent load_file(const std::string& path);

    const ObsNormalizer& normalizer() const { return norm_; }
    const ActionSquash& squash() const { return squash_; }
    double gamma() const { return gamma_; }
    double tau() const { return tau_; }
    double reward_scale() const { return reward_scale_; }
    std::uint64_t config_hash() const { return config_hash_; }
    const std::string& provenance() const { return provenance_; }
    std::int64_t trained_episodes() const { return trained_episodes_; }
    std::uint64_t training_seed() const { return training_seed_; }

    Mlp actor, critic, target_actor, target_critic;
    AdamState actor_opt, critic_opt;

    void set_meta(std::int64_t episodes, std::uint64_t seed) {
        trained_episodes_ = episodes;
        training_seed_ = seed;
    }

private:
    Agent() = default;

    ObsNormalizer norm_;
    ActionSquash squash_;
    double gamma_ = 0.99999;
    double tau_ = 0.005;
    double reward_scale_ = 0.01;
    std::uint64_t config_hash_ = 0;
    std::string provenance_;
    std::int64_t trained_episodes_ = 0;
    std::uint64_t training_seed_ = 0;

    // scratch buffers for batched updates
    mutable ForwardCache critic_cache_, actor_cache_, actor_critic_cache_;
    mutable Gradients critic_grads_, actor_grads_, chain_grads_;
    mutable Eigen::MatrixXd s_batch_, s2_batch_, x_batch_, x2_batch_;
    mutable Eigen::VectorXd y_targets_;
};

/// One training episode: observe -> act -> step -> reward -> replay push, one
/// critic + actor update and soft target updates per environment step once
/// the warm-up is filled. Ends on collision, on a resolved (all-stopped)
/// scenario, or at the step cap. A resolved scenario contributes its exact
/// closed-form reward tail, so logged returns match full-horizon episodes.
EpisodeStats train_episode(Agent& agent, const ScenarioInstance& inst, const TrainingConfig& cfg,
                           ReplayBuffer& buffer, double noise_std, std::uint64_t episode_seed,
                           Rng& sample_rng, bool learn = true);

/// Deterministic rollout of a policy on one scenario; no exploration, no
/// learning.
EpisodeStats evaluate_episode(const Agent& agent, const ScenarioInstance& inst,
                              const TrainingConfig& cfg);

struct SeedResult {
    std::uint64_t seed = 0;
    std::vector<double> returns;       // one per episode
    std::vector<int> steps;            // episode lengths
    std::vector<char> collided;        // per-episode collision flag
    double best_eval_success = -1.0;   // fraction of eval scenarios survived
    int best_eval_episode = -1;
};

struct TrainResult {
    std::vector<SeedResult> seeds;
    std::string best_checkpoint; // serialized agent bytes
    std::uint64_t best_seed = 0;
    double best_eval_success = -1.0;
};

using ProgressFn = std::function<void(std::uint64_t seed, int episode, const EpisodeStats&,
                                      double eval_success)>;

/// Multi-seed training harness. Each seed trains independently and
/// reproducibly; the returned best checkpoint maximizes evaluation success
/// over a fixed set of feasible deceleration pairs.
TrainResult train(const TrainingConfig& cfg, const ProgressFn& progress = nullptr);

}  // namespace prl
