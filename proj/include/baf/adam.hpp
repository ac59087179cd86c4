#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "baf/tensor.hpp"

namespace baf {

// Adam with bias correction. Templated so the test oracle can run the same
// update rule at 64-bit precision.
template <typename T>
struct AdamStateT {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t t = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);

    explicit AdamStateT(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads,
               AdamStateT<T>& state, T lr) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        state.m.size() != state.v.size())
        throw ContractError("adam_step: length mismatch");
    if (!(lr >= T(0)))
        throw ContractError("adam_step: negative learning rate");
    state.t += 1;
    const T c1 = T(1) - std::pow(state.beta1, static_cast<T>(state.t));
    const T c2 = T(1) - std::pow(state.beta2, static_cast<T>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (T(1) - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (T(1) - state.beta2) * g * g;
        const T mhat = state.m[i] / c1;
        const T vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

using AdamState = AdamStateT<float>;

}  // namespace baf
