#include "nevae/adam.hpp"

#include <cmath>
#include <string>

namespace nevae {

namespace {

void update(std::span<Tensor> params, const std::vector<std::span<const double>>& grads,
            AdamState& state) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " grads");
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].numel(), 0.0);
            state.v[i].assign(params[i].numel(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw ShapeError("adam_step: state tracks " + std::to_string(state.m.size()) +
                         " params, got " + std::to_string(params.size()));

    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].mutable_data();
        const auto g = grads[i];
        if (g.size() != p.size() || state.m[i].size() != p.size())
            throw ShapeError("adam_step: param " + std::to_string(i) + " shape " +
                             shape_str(params[i].shape()) + " does not match its gradient");
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

}  // namespace

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
    std::vector<std::span<const double>> gs;
    gs.reserve(grads.size());
    for (const auto& g : grads) gs.push_back(g.data());
    update(params, gs, state);
}

void adam_step(std::span<Tensor> params, AdamState& state) {
    std::vector<std::span<const double>> gs;
    gs.reserve(params.size());
    for (const auto& p : params) gs.push_back(p.grad());
    update(params, gs, state);
}

}  // namespace nevae
