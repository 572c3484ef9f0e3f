#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nevae/tensor.hpp"

namespace nevae {

// Adam with bias correction. Moment buffers are created on the first step and
// keyed by parameter order, so the same parameter list must be passed on every
// call.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void reset_moments() {
        m.clear();
        v.clear();
        step = 0;
    }
};

// In-place update: params[i] -= lr * m_hat / (sqrt(v_hat) + epsilon).
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

// Convenience overload reading each parameter's own gradient buffer.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace nevae
