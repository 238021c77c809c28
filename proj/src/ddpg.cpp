#include "platoonrl/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "platoonrl/feasibility.hpp"

namespace prl {

namespace {

constexpr char kAgentMagic[8] = {'P', 'R', 'L', 'A', 'G', 'N', 'T', '1'};
constexpr std::uint32_t kAgentVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("agent load: truncated or corrupt file");
    return v;
}

double geometric_tail(double gamma, int n) {
    // sum_{j=1..n} gamma^j
    if (n <= 0) return 0.0;
    if (std::abs(1.0 - gamma) < 1e-12) return static_cast<double>(n);
    return gamma * (1.0 - std::pow(gamma, n)) / (1.0 - gamma);
}

/// Reward with the penalty denominators floored at a small epsilon so states
/// inside the positivity barrier (possible without a collision when the
/// barrier sits above the collision threshold) yield a large finite penalty
/// instead of an error. Training and evaluation rollouts use this variant;
/// the strict contract lives in step_reward.
double step_reward_clamped(const EnvState& s, const RewardParams& p, bool collided) {
    if (collided) return p.c0_collision;
    if (p.variant == RewardVariant::FixedReward) return p.c3;
    constexpr double eps = 1e-3;
    const double a = std::max(s.d_fm - p.c_fm + p.c1, eps);
    const double b = std::max(s.d_mr - p.c_mr + p.c2, eps);
    return p.c3 - (p.f_fm / a + p.f_mr / b);
}

}  // namespace

Agent Agent::fresh(std::uint64_t seed, const TrainingConfig& cfg) {
    Agent a;
    a.squash_.a_min = cfg.a_min;
    a.squash_.a_max = cfg.a_max;
    a.gamma_ = cfg.gamma;
    a.tau_ = cfg.tau;
    a.reward_scale_ = cfg.reward_scale;
    a.config_hash_ = cfg.config_hash;
    a.provenance_ = cfg.config_text;

    Rng actor_rng(Rng::derive(seed, {0xac7011u}));
    Rng critic_rng(Rng::derive(seed, {0xc717c0u}));
    const std::vector<int> actor_sizes = {8, 256, 256, 256, 1};
    const std::vector<int> critic_sizes = {9, 256, 256, 256, 1};
    const std::vector<Activation> actor_acts = {Activation::ReLU, Activation::ReLU,
                                                Activation::ReLU, Activation::Tanh};
    const std::vector<Activation> critic_acts = {Activation::ReLU, Activation::ReLU,
                                                 Activation::ReLU, Activation::None};
    a.actor = make_mlp(actor_sizes, actor_acts, actor_rng, a.squash_.neutral_bias());
    a.critic = make_mlp(critic_sizes, critic_acts, critic_rng);
    a.target_actor = a.actor;
    a.target_critic = a.critic;
    a.actor_opt = make_adam(a.actor, cfg.actor_lr, cfg.weight_decay);
    a.critic_opt = make_adam(a.critic, cfg.critic_lr, cfg.weight_decay);
    return a;
}

double Agent::act_deterministic(const EnvState& s) const {
    Eigen::MatrixXd in(8, 1);
    norm_.fill(s, in.data());
    const Eigen::MatrixXd out = mlp_forward(actor, in);
    return squash_.to_action(out(0, 0));
}

double Agent::act(const EnvState& s, double noise_std, Rng& rng) const {
    double a = act_deterministic(s);
    if (noise_std > 0.0) {
        a += rng.normal(0.0, noise_std);
    }
    return std::clamp(a, squash_.a_min, squash_.a_max);
}

Eigen::VectorXd Agent::act_batch(const Eigen::MatrixXd& states) const {
    const Eigen::MatrixXd out = mlp_forward(actor, states);
    Eigen::VectorXd actions(out.cols());
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
        actions(i) = squash_.to_action(out(0, i));
    }
    return actions;
}

Eigen::VectorXd Agent::critic_targets(const std::vector<const Transition*>& batch) const {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) throw std::domain_error("critic_targets: empty batch");
    s2_batch_.resize(8, b);
    x2_batch_.resize(9, b);
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int j = 0; j < 8; ++j) s2_batch_(j, i) = batch[i]->next_state[j];
    }
    const Eigen::MatrixXd mu2 = mlp_forward(target_actor, s2_batch_);
    x2_batch_.topRows(8) = s2_batch_;
    for (Eigen::Index i = 0; i < b; ++i) {
        x2_batch_(8, i) = squash_.to_action(mu2(0, i)) / norm_.acc_scale;
    }
    const Eigen::MatrixXd q2 = mlp_forward(target_critic, x2_batch_);
    Eigen::VectorXd y(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Transition& t = *batch[i];
        y(i) = t.reward + (t.done ? 0.0 : gamma_ * q2(0, i));
    }
    return y;
}

double Agent::update_critic(const std::vector<const Transition*>& batch) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) throw std::domain_error("update_critic: empty batch");
    y_targets_ = critic_targets(batch);
    x_batch_.resize(9, b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Transition& t = *batch[i];
        for (int j = 0; j < 8; ++j) x_batch_(j, i) = t.state[j];
        x_batch_(8, i) = t.action / norm_.acc_scale;
    }

    const Eigen::MatrixXd& q = mlp_forward(critic, x_batch_, critic_cache_);
    Eigen::MatrixXd dout = q;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        const double e = q(0, i) - y_targets_(i);
        loss += e * e;
        dout(0, i) = 2.0 * e / static_cast<double>(b);
    }
    loss /= static_cast<double>(b);

    mlp_backward(critic, critic_cache_, dout, critic_grads_);
    adam_step(critic, critic_grads_, critic_opt);
    return loss;
}

double Agent::update_actor(const std::vector<const Transition*>& batch) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) throw std::domain_error("update_actor: empty batch");
    s_batch_.resize(8, b);
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int j = 0; j < 8; ++j) s_batch_(j, i) = batch[i]->state[j];
    }

    const Eigen::MatrixXd& mu = mlp_forward(actor, s_batch_, actor_cache_);
    x_batch_.resize(9, b);
    x_batch_.topRows(8) = s_batch_;
    for (Eigen::Index i = 0; i < b; ++i) {
        x_batch_(8, i) = squash_.to_action(mu(0, i)) / norm_.acc_scale;
    }
    const Eigen::MatrixXd& q = mlp_forward(critic, x_batch_, actor_critic_cache_);
    const double mean_q = q.row(0).mean();

    // ascend E[Q(s, mu(s))]: chain d(meanQ)/d(action input) through the squash
    Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, b, 1.0 / static_cast<double>(b));
    mlp_backward(critic, actor_critic_cache_, dq, chain_grads_, /*need_param_grads=*/false);
    const double scale = squash_.radius() / norm_.acc_scale;
    Eigen::MatrixXd dmu = (-scale) * chain_grads_.dinput.row(8);
    mlp_backward(actor, actor_cache_, dmu, actor_grads_);
    adam_step(actor, actor_grads_, actor_opt);
    return mean_q / reward_scale_;
}

void Agent::soft_update_targets() {
    soft_update(target_actor, actor, tau_);
    soft_update(target_critic, critic, tau_);
}

void Agent::save(std::ostream& os) const {
    os.write(kAgentMagic, sizeof(kAgentMagic));
    write_pod(os, kAgentVersion);
    write_pod(os, gamma_);
    write_pod(os, tau_);
    write_pod(os, reward_scale_);
    write_pod(os, squash_.a_min);
    write_pod(os, squash_.a_max);
    write_pod(os, norm_.dist_scale);
    write_pod(os, norm_.vel_scale);
    write_pod(os, norm_.acc_scale);
    write_pod(os, norm_.dist_clip);
    write_pod(os, trained_episodes_);
    write_pod(os, training_seed_);
    write_pod(os, config_hash_);
    write_pod<std::uint64_t>(os, provenance_.size());
    os.write(provenance_.data(), static_cast<std::streamsize>(provenance_.size()));
    save_mlp(os, actor);
    save_mlp(os, critic);
    save_mlp(os, target_actor);
    save_mlp(os, target_critic);
    save_adam(os, actor_opt);
    save_adam(os, critic_opt);
}

Agent Agent::load(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kAgentMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("agent load: bad magic (not a checkpoint?)");
    }
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kAgentVersion) {
        throw std::runtime_error("agent load: unsupported checkpoint version");
    }
    Agent a;
    a.gamma_ = read_pod<double>(is);
    a.tau_ = read_pod<double>(is);
    a.reward_scale_ = read_pod<double>(is);
    a.squash_.a_min = read_pod<double>(is);
    a.squash_.a_max = read_pod<double>(is);
    a.norm_.dist_scale = read_pod<double>(is);
    a.norm_.vel_scale = read_pod<double>(is);
    a.norm_.acc_scale = read_pod<double>(is);
    a.norm_.dist_clip = read_pod<double>(is);
    a.trained_episodes_ = read_pod<std::int64_t>(is);
    a.training_seed_ = read_pod<std::uint64_t>(is);
    a.config_hash_ = read_pod<std::uint64_t>(is);
    const auto prov_len = read_pod<std::uint64_t>(is);
    if (prov_len > (1u << 24)) throw std::runtime_error("agent load: implausible provenance size");
    a.provenance_.resize(prov_len);
    is.read(a.provenance_.data(), static_cast<std::streamsize>(prov_len));
    if (!is) throw std::runtime_error("agent load: truncated or corrupt file");
    a.actor = load_mlp(is);
    a.critic = load_mlp(is);
    a.target_actor = load_mlp(is);
    a.target_critic = load_mlp(is);
    a.actor_opt = load_adam(is, a.actor);
    a.critic_opt = load_adam(is, a.critic);
    return a;
}

void Agent::save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    save(os);
}

Agent Agent::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    return load(is);
}

namespace {

bool scenario_resolved(const Platoon& p, const ScenarioInstance& inst) {
    if (inst.cfg.cutin && p.time_step <= inst.cfg.cutin->trigger_step) return false;
    return true;
}

}  // namespace

EpisodeStats train_episode(Agent& agent, const ScenarioInstance& inst, const TrainingConfig& cfg,
                           ReplayBuffer& buffer, double noise_std, std::uint64_t episode_seed,
                           Rng& sample_rng, bool learn) {
    Platoon p = make_platoon(inst);
    EgoObserver observer;
    Rng jitter(inst.jitter_seed);
    Rng noise(Rng::derive(episode_seed, {0xA015Eu}));

    EpisodeStats st;
    EnvState s = observer.observe(p, p.ego_index());
    double discount = 1.0;
    std::vector<Event> events;
    std::vector<const Transition*> batch;
    const std::size_t warmup =
        std::max<std::size_t>(static_cast<std::size_t>(cfg.batch), cfg.warmup_transitions);

    for (int k = 0; k < cfg.episode_steps; ++k) {
        const double a = learn ? agent.act(s, noise_std, noise) : agent.act_deterministic(s);
        events.clear();
        const double cmd[1] = {a};
        step_platoon(p, inst, cmd, jitter, &events);
        bool collided = false;
        for (const Event& e : events) {
            if (e.kind == EventKind::Collision) collided = true;
        }
        const EnvState s2 = observer.observe(p, p.ego_index());
        double r = step_reward_clamped(s2, cfg.reward, collided);
        st.min_d_fm = std::min(st.min_d_fm, s2.d_fm);
        st.min_d_mr = std::min(st.min_d_mr, s2.d_mr);
        discount *= cfg.gamma;
        st.return_total += discount * r;

        bool done = collided;
        bool truncated = false;
        if (!collided && cfg.truncate_on_stop && all_stopped(p) && scenario_resolved(p, inst)) {
            // the platoon is parked: the rest of the horizon pays a constant
            // reward stream, folded in exactly
            const int remaining = cfg.episode_steps - (k + 1);
            const double tail = geometric_tail(cfg.gamma, remaining);
            st.return_total += discount * tail * r;
            r += tail * r;
            done = true;
            truncated = true;
        }

        Transition t;
        t.state = s.as_array();
        t.action = a;
        t.reward = r * cfg.reward_scale;
        t.next_state = s2.as_array();
        t.done = done;
        buffer.push(t);

        if (learn && buffer.size() >= warmup) {
            buffer.sample(static_cast<std::size_t>(cfg.batch), sample_rng, batch);
            agent.update_critic(batch);
            agent.update_actor(batch);
            agent.soft_update_targets();
        }

        st.steps = k + 1;
        if (collided) {
            st.collided = true;
            break;
        }
        if (truncated) {
            st.truncated_on_stop = true;
            break;
        }
        s = s2;
    }
    return st;
}

EpisodeStats evaluate_episode(const Agent& agent, const ScenarioInstance& inst,
                              const TrainingConfig& cfg) {
    Platoon p = make_platoon(inst);
    EgoObserver observer;
    Rng jitter(inst.jitter_seed);
    EpisodeStats st;
    EnvState s = observer.observe(p, p.ego_index());
    double discount = 1.0;
    std::vector<Event> events;
    for (int k = 0; k < cfg.episode_steps; ++k) {
        const double a = agent.act_deterministic(s);
        events.clear();
        const double cmd[1] = {a};
        step_platoon(p, inst, cmd, jitter, &events);
        bool collided = false;
        for (const Event& e : events) {
            if (e.kind == EventKind::Collision) collided = true;
        }
        const EnvState s2 = observer.observe(p, p.ego_index());
        const double r = step_reward_clamped(s2, cfg.reward, collided);
        st.min_d_fm = std::min(st.min_d_fm, s2.d_fm);
        st.min_d_mr = std::min(st.min_d_mr, s2.d_mr);
        discount *= cfg.gamma;
        st.return_total += discount * r;
        st.steps = k + 1;
        if (collided) {
            st.collided = true;
            break;
        }
        if (cfg.truncate_on_stop && all_stopped(p) && scenario_resolved(p, inst)) {
            const int remaining = cfg.episode_steps - (k + 1);
            st.return_total += discount * geometric_tail(cfg.gamma, remaining) * r;
            st.truncated_on_stop = true;
            break;
        }
        s = s2;
    }
    return st;
}

namespace {

std::vector<std::pair<double, double>> eval_deceleration_pairs(const TrainingConfig& cfg) {
    std::vector<std::pair<double, double>> pairs;
    Rng rng(0xE7A1DECEu);
    int attempts = 0;
    while (static_cast<int>(pairs.size()) < cfg.eval_scenarios && attempts < cfg.eval_scenarios * 200) {
        ++attempts;
        const double d_l = rng.uniform(cfg.a_min, 0.0);
        const double d_f = rng.uniform(cfg.a_min, 0.0);
        if (feasibility_oracle(cfg.scenario, d_l, d_f)) pairs.emplace_back(d_l, d_f);
    }
    if (pairs.empty()) throw std::runtime_error("train: no feasible evaluation pairs found");
    return pairs;
}

double evaluate_success(const Agent& agent, const TrainingConfig& cfg,
                        const std::vector<std::pair<double, double>>& pairs) {
    int survived = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ScenarioInstance inst = sample_scenario(cfg.scenario, Rng::derive(0xEBA1u, {i}));
        inst.lead_brakes = true;
        inst.lead_brake_decel = pairs[i].first;
        inst.follow_brake_decel = pairs[i].second;
        const EpisodeStats st = evaluate_episode(agent, inst, cfg);
        if (!st.collided) ++survived;
    }
    return static_cast<double>(survived) / static_cast<double>(pairs.size());
}

}  // namespace

TrainResult train(const TrainingConfig& cfg, const ProgressFn& progress) {
    if (cfg.seed_hi < cfg.seed_lo) throw std::domain_error("train: empty seed range");
    TrainResult result;
    const auto eval_pairs = eval_deceleration_pairs(cfg);

    for (int seed = cfg.seed_lo; seed <= cfg.seed_hi; ++seed) {
        const auto useed = static_cast<std::uint64_t>(seed);
        Agent agent = Agent::fresh(Rng::derive(useed, {0x17u}), cfg);
        ReplayBuffer buffer(static_cast<std::size_t>(cfg.memory));
        Rng sample_rng(Rng::derive(useed, {0x5a3bu}));

        SeedResult sr;
        sr.seed = useed;
        double noise = cfg.noise_initial;
        int perfect_streak = 0;

        for (int ep = 0; ep < cfg.max_episodes; ++ep) {
            const ScenarioInstance inst =
                sample_scenario(cfg.scenario, Rng::derive(useed, {0x5ce9u, static_cast<std::uint64_t>(ep)}));
            const EpisodeStats st =
                train_episode(agent, inst, cfg, buffer, noise,
                              Rng::derive(useed, {0xeb15u, static_cast<std::uint64_t>(ep)}), sample_rng);
            sr.returns.push_back(st.return_total);
            sr.steps.push_back(st.steps);
            sr.collided.push_back(st.collided ? 1 : 0);
            noise = std::max(cfg.noise_floor, noise * cfg.noise_decay);

            double eval_success = -1.0;
            if ((ep + 1) % cfg.eval_every == 0) {
                eval_success = evaluate_success(agent, cfg, eval_pairs);
                perfect_streak = eval_success >= 1.0 ? perfect_streak + 1 : 0;
                if (eval_success > sr.best_eval_success) {
                    sr.best_eval_success = eval_success;
                    sr.best_eval_episode = ep;
                    if (eval_success > result.best_eval_success) {
                        agent.set_meta(ep + 1, useed);
                        std::ostringstream os(std::ios::binary);
                        agent.save(os);
                        result.best_checkpoint = os.str();
                        result.best_seed = useed;
                        result.best_eval_success = eval_success;
                    }
                }
            }
            if (progress) progress(useed, ep, st, eval_success);
            if (cfg.early_stop_perfect > 0 && perfect_streak >= cfg.early_stop_perfect) break;
        }
        result.seeds.push_back(std::move(sr));
    }
    return result;
}

}  // namespace prl
