#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "platoonrl/rng.hpp"

namespace prl {

enum class Activation : std::uint8_t { ReLU = 0, Tanh = 1, None = 2 };

/// Dense multilayer perceptron, 64-bit throughout. Batches are stored as
/// columns (input_dim x batch) so the hot path is plain column-major GEMM.
struct Mlp {
    std::vector<int> sizes;                // layer widths, length >= 2
    std::vector<Activation> activations;   // one per weight layer
    std::vector<Eigen::MatrixXd> weights;  // out x in
    std::vector<Eigen::VectorXd> biases;   // out
    std::uint64_t revision = 0;            // bumped on every parameter change

    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
    std::size_t parameter_count() const;
};

/// He-uniform init for hidden layers, uniform +-1e-3 for the output layer.
/// `output_bias` presets the last bias (used to center a squashed actor).
Mlp make_mlp(const std::vector<int>& sizes, const std::vector<Activation>& activations,
             Rng& rng, double output_bias = 0.0);

/// Post-activation values per layer; acts[0] is the input, acts[L] the output.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> acts;
    const Mlp* net = nullptr;
    std::uint64_t revision = 0;
};

struct Gradients {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;
    Eigen::MatrixXd dinput;
};

/// Forward pass over a batch of columns. With a cache the activations are
/// retained for a later backward pass.
const Eigen::MatrixXd& mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                                   ForwardCache& cache);
Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input);
Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input);

/// Exact reverse-mode gradients from a cached forward. Throws if the cache
/// does not match the network revision it was produced from. When
/// `need_param_grads` is false only dinput is produced (the actor's chain
/// through a frozen critic).
void mlp_backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& dout,
                  Gradients& grads, bool need_param_grads = true);

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    std::int64_t step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0; // L2, applied as grad += wd * param
};

AdamState make_adam(const Mlp& net, double learning_rate, double weight_decay = 0.0);

/// One Adam step with bias correction; weight decay is added to the gradient.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

/// target = (1 - tau) * target + tau * online, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

/// Binary serialization; round-trips are bit identical.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);
void save_adam(std::ostream& os, const AdamState& s);
AdamState load_adam(std::istream& is, const Mlp& net);

}  // namespace prl
