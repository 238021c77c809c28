#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "platoonrl/rng.hpp"

namespace prl {

struct Transition {
    std::array<double, 8> state{};
    double action = 0.0;
    double reward = 0.0;
    std::array<double, 8> next_state{};
    bool done = false;
};

/// Fixed-capacity ring with FIFO eviction and uniform replacement-free
/// sampling within a batch.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw std::domain_error("ReplayBuffer: capacity must be positive");
        data_.reserve(capacity_);
    }

    void push(const Transition& t) {
        if (data_.size() < capacity_) {
            data_.push_back(t);
        } else {
            data_[head_] = t;
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return data_[i]; }

    /// Draws `batch` distinct indices uniformly (partial Fisher-Yates).
    void sample(std::size_t batch, Rng& rng, std::vector<const Transition*>& out) const {
        if (batch > data_.size()) {
            throw std::domain_error("ReplayBuffer::sample: fewer transitions than batch size");
        }
        scratch_.resize(data_.size());
        for (std::size_t i = 0; i < scratch_.size(); ++i) scratch_[i] = i;
        out.resize(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(i),
                                static_cast<std::int64_t>(scratch_.size()) - 1));
            std::swap(scratch_[i], scratch_[j]);
            out[i] = &data_[scratch_[i]];
        }
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
    mutable std::vector<std::size_t> scratch_;
};

}  // namespace prl
