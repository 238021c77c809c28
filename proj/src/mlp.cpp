#include "platoonrl/mlp.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace prl {

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l) {
        n += static_cast<std::size_t>(weights[l].size()) + static_cast<std::size_t>(biases[l].size());
    }
    return n;
}

Mlp make_mlp(const std::vector<int>& sizes, const std::vector<Activation>& activations,
             Rng& rng, double output_bias) {
    if (sizes.size() < 2) throw std::domain_error("make_mlp: need at least two layer sizes");
    if (activations.size() != sizes.size() - 1) {
        throw std::domain_error("make_mlp: one activation per weight layer");
    }
    Mlp net;
    net.sizes = sizes;
    net.activations = activations;
    const int layers = static_cast<int>(sizes.size()) - 1;
    net.weights.resize(layers);
    net.biases.resize(layers);
    for (int l = 0; l < layers; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const bool output_layer = (l == layers - 1);
        const double bound = output_layer ? 1e-3 : std::sqrt(6.0 / in);
        net.weights[l].resize(out, in);
        for (int j = 0; j < in; ++j) {
            for (int i = 0; i < out; ++i) {
                net.weights[l](i, j) = rng.uniform(-bound, bound);
            }
        }
        net.biases[l] = Eigen::VectorXd::Constant(out, output_layer ? output_bias : 0.0);
    }
    return net;
}

namespace {

inline void apply_activation(Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::ReLU:
            z = z.cwiseMax(0.0);
            break;
        case Activation::Tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::None:
            break;
    }
}

// derivative expressed through the post-activation value
inline Eigen::ArrayXXd activation_grad(const Eigen::MatrixXd& a, Activation act) {
    switch (act) {
        case Activation::ReLU:
            return (a.array() > 0.0).cast<double>();
        case Activation::Tanh:
            return 1.0 - a.array().square();
        case Activation::None:
            return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
    }
    return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
}

}  // namespace

const Eigen::MatrixXd& mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                                   ForwardCache& cache) {
    if (input.rows() != net.input_dim()) throw std::domain_error("mlp_forward: input dim mismatch");
    const int layers = net.layer_count();
    cache.acts.resize(layers + 1);
    cache.net = &net;
    cache.revision = net.revision;
    cache.acts[0] = input;
    for (int l = 0; l < layers; ++l) {
        Eigen::MatrixXd& z = cache.acts[l + 1];
        z.noalias() = net.weights[l] * cache.acts[l];
        z.colwise() += net.biases[l];
        apply_activation(z, net.activations[l]);
    }
    return cache.acts.back();
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input) {
    if (input.rows() != net.input_dim()) throw std::domain_error("mlp_forward: input dim mismatch");
    Eigen::MatrixXd a = input;
    Eigen::MatrixXd z;
    for (int l = 0; l < net.layer_count(); ++l) {
        z.noalias() = net.weights[l] * a;
        z.colwise() += net.biases[l];
        apply_activation(z, net.activations[l]);
        a.swap(z);
    }
    return a;
}

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input) {
    return mlp_forward(net, Eigen::MatrixXd(input)).col(0);
}

void mlp_backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& dout,
                  Gradients& grads, bool need_param_grads) {
    const int layers = net.layer_count();
    if (cache.net != &net || cache.revision != net.revision ||
        static_cast<int>(cache.acts.size()) != layers + 1) {
        throw std::domain_error("mlp_backward: stale or mismatched forward cache");
    }
    if (dout.rows() != net.output_dim() || dout.cols() != cache.acts.back().cols()) {
        throw std::domain_error("mlp_backward: output gradient shape mismatch");
    }
    grads.dw.resize(layers);
    grads.db.resize(layers);

    Eigen::MatrixXd delta = dout.cwiseProduct(
        activation_grad(cache.acts[layers], net.activations[layers - 1]).matrix());
    for (int l = layers - 1; l >= 0; --l) {
        if (need_param_grads) {
            grads.dw[l].noalias() = delta * cache.acts[l].transpose();
            grads.db[l] = delta.rowwise().sum();
        }
        if (l > 0) {
            Eigen::MatrixXd prev;
            prev.noalias() = net.weights[l].transpose() * delta;
            prev = prev.cwiseProduct(activation_grad(cache.acts[l], net.activations[l - 1]).matrix());
            delta.swap(prev);
        } else {
            grads.dinput.noalias() = net.weights[0].transpose() * delta;
        }
    }
}

AdamState make_adam(const Mlp& net, double learning_rate, double weight_decay) {
    AdamState s;
    s.learning_rate = learning_rate;
    s.weight_decay = weight_decay;
    const int layers = net.layer_count();
    s.mw.resize(layers);
    s.vw.resize(layers);
    s.mb.resize(layers);
    s.vb.resize(layers);
    for (int l = 0; l < layers; ++l) {
        s.mw[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
        s.vw[l] = s.mw[l];
        s.mb[l] = Eigen::VectorXd::Zero(net.biases[l].size());
        s.vb[l] = s.mb[l];
    }
    return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
    const int layers = net.layer_count();
    if (static_cast<int>(grads.dw.size()) != layers || static_cast<int>(state.mw.size()) != layers) {
        throw std::domain_error("adam_step: gradient/state shape mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double lr = state.learning_rate;

    for (int l = 0; l < layers; ++l) {
        auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
            auto g = (grad + state.weight_decay * param).eval();
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = (state.beta2 * v).array() + (1.0 - state.beta2) * g.array().square();
            param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.epsilon);
        };
        update(net.weights[l], grads.dw[l], state.mw[l], state.vw[l]);
        update(net.biases[l], grads.db[l], state.mb[l], state.vb[l]);
    }
    net.revision += 1;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
    if (target.sizes != online.sizes || target.activations != online.activations) {
        throw std::domain_error("soft_update: architecture mismatch");
    }
    for (int l = 0; l < target.layer_count(); ++l) {
        target.weights[l] = (1.0 - tau) * target.weights[l] + tau * online.weights[l];
        target.biases[l] = (1.0 - tau) * target.biases[l] + tau * online.biases[l];
    }
    target.revision += 1;
}

namespace {

constexpr char kMlpMagic[8] = {'P', 'R', 'L', 'M', 'L', 'P', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("mlp load: truncated or corrupt stream");
    return v;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    write_pod<std::int64_t>(os, m.rows());
    write_pod<std::int64_t>(os, m.cols());
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::istream& is) {
    const auto rows = read_pod<std::int64_t>(is);
    const auto cols = read_pod<std::int64_t>(is);
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 28)) {
        throw std::runtime_error("mlp load: implausible matrix shape");
    }
    Eigen::MatrixXd m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!is) throw std::runtime_error("mlp load: truncated or corrupt stream");
    return m;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    write_pod<std::int64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Eigen::VectorXd read_vector(std::istream& is) {
    const auto n = read_pod<std::int64_t>(is);
    if (n < 0 || n > (1LL << 26)) throw std::runtime_error("mlp load: implausible vector size");
    Eigen::VectorXd v(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    if (!is) throw std::runtime_error("mlp load: truncated or corrupt stream");
    return v;
}

}  // namespace

void save_mlp(std::ostream& os, const Mlp& net) {
    os.write(kMlpMagic, sizeof(kMlpMagic));
    write_pod<std::int32_t>(os, static_cast<std::int32_t>(net.sizes.size()));
    for (int s : net.sizes) write_pod<std::int32_t>(os, s);
    for (Activation a : net.activations) write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(a));
    for (int l = 0; l < net.layer_count(); ++l) {
        write_matrix(os, net.weights[l]);
        write_vector(os, net.biases[l]);
    }
}

Mlp load_mlp(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMlpMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("mlp load: bad magic");
    }
    const auto n_sizes = read_pod<std::int32_t>(is);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("mlp load: bad layer count");
    Mlp net;
    net.sizes.resize(n_sizes);
    for (auto& s : net.sizes) s = read_pod<std::int32_t>(is);
    net.activations.resize(n_sizes - 1);
    for (auto& a : net.activations) {
        const auto raw = read_pod<std::uint8_t>(is);
        if (raw > 2) throw std::runtime_error("mlp load: bad activation tag");
        a = static_cast<Activation>(raw);
    }
    net.weights.resize(n_sizes - 1);
    net.biases.resize(n_sizes - 1);
    for (int l = 0; l < net.layer_count(); ++l) {
        net.weights[l] = read_matrix(is);
        net.biases[l] = read_vector(is);
        if (net.weights[l].rows() != net.sizes[l + 1] || net.weights[l].cols() != net.sizes[l] ||
            net.biases[l].size() != net.sizes[l + 1]) {
            throw std::runtime_error("mlp load: shape inconsistent with layer sizes");
        }
    }
    return net;
}

void save_adam(std::ostream& os, const AdamState& s) {
    write_pod<std::int64_t>(os, s.step);
    write_pod(os, s.learning_rate);
    write_pod(os, s.beta1);
    write_pod(os, s.beta2);
    write_pod(os, s.epsilon);
    write_pod(os, s.weight_decay);
    write_pod<std::int32_t>(os, static_cast<std::int32_t>(s.mw.size()));
    for (std::size_t l = 0; l < s.mw.size(); ++l) {
        write_matrix(os, s.mw[l]);
        write_matrix(os, s.vw[l]);
        write_vector(os, s.mb[l]);
        write_vector(os, s.vb[l]);
    }
}

AdamState load_adam(std::istream& is, const Mlp& net) {
    AdamState s;
    s.step = read_pod<std::int64_t>(is);
    s.learning_rate = read_pod<double>(is);
    s.beta1 = read_pod<double>(is);
    s.beta2 = read_pod<double>(is);
    s.epsilon = read_pod<double>(is);
    s.weight_decay = read_pod<double>(is);
    const auto layers = read_pod<std::int32_t>(is);
    if (layers != net.layer_count()) throw std::runtime_error("adam load: layer count mismatch");
    s.mw.resize(layers);
    s.vw.resize(layers);
    s.mb.resize(layers);
    s.vb.resize(layers);
    for (int l = 0; l < layers; ++l) {
        s.mw[l] = read_matrix(is);
        s.vw[l] = read_matrix(is);
        s.mb[l] = read_vector(is);
        s.vb[l] = read_vector(is);
        if (s.mw[l].rows() != net.weights[l].rows() || s.mw[l].cols() != net.weights[l].cols()) {
            throw std::runtime_error("adam load: moment shape mismatch");
        }
    }
    return s;
}

}  // namespace prl
