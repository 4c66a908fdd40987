#pragma once

// Central-difference gradient verification. The whole check path runs in
// 64-bit arithmetic: f32 training values are cast up before checking, which
// keeps the 1e-4 relative-error budget meaningful.

#include <functional>
#include <vector>

#include "coodkit/optim.hpp"
#include "coodkit/tensor.hpp"

namespace cood::ad {

// f receives a tape plus leaf tensors parallel to `params.items` and must
// return a scalar. Returns the max over all parameter entries of
// |analytic - central difference| / max(1e-8, |analytic| + |numeric|).
inline double gradient_check(
    const std::function<TensorT<double>(TapeT<double>&, const std::vector<TensorT<double>>&)>& f,
    ParamSetT<double> params, double h = 1e-4) {
    if (h <= 0) throw OutOfRange("gradient_check: h must be positive");

    // analytic gradients
    std::vector<std::vector<double>> analytic;
    {
        TapeT<double> tape;
        std::vector<TensorT<double>> leaves;
        leaves.reserve(params.items.size());
        for (const auto& p : params.items) leaves.push_back(tape.leaf(p.shape, p.values));
        TensorT<double> loss = f(tape, leaves);
        tape.backward(loss);
        for (const auto& l : leaves) analytic.push_back(tape.grad(l));
    }

    auto eval = [&](const ParamSetT<double>& ps) {
        TapeT<double> tape;
        std::vector<TensorT<double>> consts;
        consts.reserve(ps.items.size());
        for (const auto& p : ps.items) consts.push_back(tape.constant(p.shape, p.values));
        return f(tape, consts).scalar_value();
    };

    double worst = 0.0;
    for (std::size_t k = 0; k < params.items.size(); ++k) {
        auto& vals = params.items[k].values;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            auto at = [&](double x) {
                vals[i] = x;
                const double v = eval(params);
                vals[i] = keep;
                return v;
            };
            // fourth-order central stencil; plain (f(x+h)-f(x-h))/2h truncation
            // is too coarse for sharply curved losses (e.g. logits scaled by
            // 1/tau) at any h that also controls f64 roundoff. The paired
            // differences cancel exactly for coordinates the loss ignores.
            const double d1 = at(keep + h) - at(keep - h);
            const double d2 = at(keep + 2 * h) - at(keep - 2 * h);
            const double numeric = (8.0 * d1 - d2) / (12.0 * h);
            const double a = analytic[k][i];
            const double rel =
                std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

} // namespace cood::ad
