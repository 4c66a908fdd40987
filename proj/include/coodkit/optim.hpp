#pragma once

// Named parameter sets, the Adam optimizer, and the linear warmup/decay
// learning-rate schedule.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "coodkit/common.hpp"
#include "coodkit/tensor.hpp"

namespace cood::ad {

template <typename T>
struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<T> values;
};

// Ordered collection of named parameter tensors. Order is the canonical
// iteration order for initialization, optimizer state, and checkpoints.
template <typename T>
struct ParamSetT {
    std::vector<NamedTensor<T>> items;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i].name == name) return static_cast<int>(i);
        return -1;
    }
    const NamedTensor<T>& at(const std::string& name) const {
        int i = index_of(name);
        if (i < 0) throw Error("MissingParameter", name);
        return items[static_cast<std::size_t>(i)];
    }
    NamedTensor<T>& at(const std::string& name) {
        int i = index_of(name);
        if (i < 0) throw Error("MissingParameter", name);
        return items[static_cast<std::size_t>(i)];
    }
    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& it : items) n += it.values.size();
        return n;
    }

    template <typename U>
    ParamSetT<U> cast() const {
        ParamSetT<U> out;
        for (const auto& it : items) {
            NamedTensor<U> nt{it.name, it.shape, std::vector<U>(it.values.size())};
            for (std::size_t i = 0; i < it.values.size(); ++i)
                nt.values[i] = static_cast<U>(it.values[i]);
            out.items.push_back(std::move(nt));
        }
        return out;
    }
};

using ParamSet = ParamSetT<float>;

template <typename T>
struct AdamStateT {
    std::int64_t step = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
    std::vector<std::vector<T>> m, v;  // one slot per parameter tensor

    static AdamStateT init(const ParamSetT<T>& params) {
        AdamStateT s;
        for (const auto& p : params.items) {
            s.m.emplace_back(p.values.size(), T(0));
            s.v.emplace_back(p.values.size(), T(0));
        }
        return s;
    }
};

using AdamState = AdamStateT<float>;

// Standard Adam with bias correction. `grads` must be parallel to
// `params.items` (same count and sizes).
template <typename T>
void adam_step(AdamStateT<T>& state, ParamSetT<T>& params,
               const std::vector<std::vector<T>>& grads, T lr) {
    if (lr <= T(0)) throw OutOfRange("adam_step: lr must be positive");
    if (grads.size() != params.items.size() || state.m.size() != params.items.size())
        throw ShapeMismatch("adam_step: parameter/gradient count mismatch");
    state.step += 1;
    const T b1t = T(1) - std::pow(state.beta1, T(state.step));
    const T b2t = T(1) - std::pow(state.beta2, T(state.step));
    for (std::size_t k = 0; k < params.items.size(); ++k) {
        auto& p = params.items[k].values;
        const auto& g = grads[k];
        if (g.size() != p.size()) throw ShapeMismatch("adam_step: gradient shape mismatch");
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (T(1) - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (T(1) - state.beta2) * g[i] * g[i];
            const T mhat = m[i] / b1t;
            const T vhat = v[i] / b2t;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

// Linear ramp 0 -> base_lr over warmup_fraction * total_steps, then linear
// decay base_lr -> 0 at total_steps.
inline double warmup_linear_lr(std::int64_t step, std::int64_t total_steps, double base_lr,
                               double warmup_fraction) {
    if (step < 0 || step > total_steps)
        throw OutOfRange("warmup_linear_lr: step " + std::to_string(step) + " outside [0, " +
                         std::to_string(total_steps) + "]");
    if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0))
        throw OutOfRange("warmup_linear_lr: warmup_fraction must be in (0,1)");
    const double warm = warmup_fraction * static_cast<double>(total_steps);
    const double s = static_cast<double>(step);
    if (s <= warm) return base_lr * (warm > 0.0 ? s / warm : 1.0);
    return base_lr * (static_cast<double>(total_steps) - s) /
           (static_cast<double>(total_steps) - warm);
}

} // namespace cood::ad
