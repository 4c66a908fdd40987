#pragma once

// Training objectives: symmetric InfoNCE over an in-batch similarity matrix,
// margin-based ID/OOD contrastive losses, the binary OOD rejection head with
// BCE, and the joint objective cl + lambda * bc.
//
// Similarity-matrix convention: S[i][j] = sim(comment_i, code_j); aligned
// pairs sit on the diagonal.

#include <string>
#include <vector>

#include "coodkit/common.hpp"
#include "coodkit/encoder.hpp"
#include "coodkit/optim.hpp"
#include "coodkit/rng.hpp"
#include "coodkit/tensor.hpp"

namespace cood::losses {

COOD_DEFINE_ERROR(NonSquare);
COOD_DEFINE_ERROR(BadTemperature);
COOD_DEFINE_ERROR(EmptyIdSet);

inline constexpr double kDefaultTau = 0.07;
inline constexpr double kDefaultMargin = 0.2;
inline constexpr double kDefaultLambda = 0.2;
inline constexpr double kBceProbEps = 1e-7;

// rows of similarities between two stacks of vectors: out[i][j] =
// cos(a_i, b_j), built from L2-normalized rows so the whole matrix is one
// matmul
template <typename T>
ad::TensorT<T> cosine_matrix(ad::TapeT<T>& tape, const ad::TensorT<T>& a_rows,
                             const ad::TensorT<T>& b_rows) {
    return tape.matmul_nt(tape.normalize_rows(a_rows), tape.normalize_rows(b_rows));
}

// L = -(1/2N) * [ sum_i log softmax_row_i(S/tau)_ii
//               + sum_i log softmax_col_i(S/tau)_ii ]
template <typename T>
ad::TensorT<T> info_nce(ad::TapeT<T>& tape, const ad::TensorT<T>& sims, double tau) {
    if (sims.rank() != 2 || sims.rows() != sims.cols())
        throw NonSquare("similarity matrix must be square");
    if (!(tau > 0)) throw BadTemperature("tau must be positive");
    const int n = sims.rows();
    auto logits = tape.scale(sims, static_cast<T>(1.0 / tau));
    auto diag_sum = tape.sum_all(tape.diag(logits));
    auto row_lse = tape.sum_all(tape.lse_rows(logits));
    auto col_lse = tape.sum_all(tape.lse_rows(tape.transpose(logits)));
    // diag appears once per direction
    auto total = tape.sub(tape.add(row_lse, col_lse), tape.scale(diag_sum, T(2)));
    return tape.scale(total, static_cast<T>(1.0 / (2.0 * n)));
}

// sum over ID pairs i of (1/N) * sum_{j != i} max(0, m - S_ii + S_ji):
// negatives are all other comments (ID or OOD) against code c_i
template <typename T>
ad::TensorT<T> margin_id_loss(ad::TapeT<T>& tape, const ad::TensorT<T>& sims,
                              const std::vector<int>& id_indices, double m) {
    if (sims.rank() != 2 || sims.rows() != sims.cols())
        throw NonSquare("similarity matrix must be square");
    if (m < 0) throw Error("BadMargin", "margin must be >= 0");
    if (id_indices.empty()) throw EmptyIdSet("margin_id_loss with no ID pairs");
    const int n = sims.rows();
    for (int i : id_indices)
        if (i < 0 || i >= n) throw ad::OutOfRange("id index " + std::to_string(i));

    // T[j][i] = m - S_ii + S_ji, masked to j != i and i in the ID set
    auto d = tape.diag(sims);
    auto shifted = tape.add_scalar(tape.add_rowvec(sims, tape.neg(d)), static_cast<T>(m));
    std::vector<T> mask(static_cast<std::size_t>(n) * n, T(0));
    for (int i : id_indices)
        for (int j = 0; j < n; ++j)
            if (j != i) mask[static_cast<std::size_t>(j) * n + i] = T(1);
    auto hinges = tape.mul(tape.relu(shifted), tape.mat(n, n, std::move(mask)));
    return tape.scale(tape.sum_all(hinges), static_cast<T>(1.0 / n));
}

// sum over OOD pairs k of (1/N) * sum_{j=1..N} max(0, -m + S_jk): every
// comment against each OOD code. Empty OOD set gives 0.
template <typename T>
ad::TensorT<T> margin_ood_loss(ad::TapeT<T>& tape, const ad::TensorT<T>& sims,
                               const std::vector<int>& ood_indices, double m) {
    if (sims.rank() != 2 || sims.rows() != sims.cols())
        throw NonSquare("similarity matrix must be square");
    if (m < 0) throw Error("BadMargin", "margin must be >= 0");
    const int n = sims.rows();
    if (ood_indices.empty()) return tape.scalar(T(0));
    for (int k : ood_indices)
        if (k < 0 || k >= n) throw ad::OutOfRange("ood index " + std::to_string(k));

    auto shifted = tape.add_scalar(sims, static_cast<T>(-m));
    std::vector<T> mask(static_cast<std::size_t>(n) * n, T(0));
    for (int k : ood_indices)
        for (int j = 0; j < n; ++j) mask[static_cast<std::size_t>(j) * n + k] = T(1);
    auto hinges = tape.mul(tape.relu(shifted), tape.mat(n, n, std::move(mask)));
    return tape.scale(tape.sum_all(hinges), static_cast<T>(1.0 / n));
}

// (1/N) * (L_id + L_ood); the nested 1/N normalization is deliberate
template <typename T>
ad::TensorT<T> cl_loss(ad::TapeT<T>& tape, const ad::TensorT<T>& id_loss,
                       const ad::TensorT<T>& ood_loss, int n) {
    if (n < 1) throw ad::OutOfRange("cl_loss needs N >= 1");
    return tape.scale(tape.add(id_loss, ood_loss), static_cast<T>(1.0 / n));
}

// ---- binary OOD rejection head ----

// 3 fully-connected layers (4d -> 2d -> 2d -> 1), Tanh after the first two,
// sigmoid on the output
struct BcConfig {
    int embed_dim = 64;
    int input_dim() const { return 4 * embed_dim; }
    int hidden_dim() const { return 2 * embed_dim; }
};

inline std::vector<std::string> bc_param_names() {
    return {"bc.w1", "bc.b1", "bc.w2", "bc.b2", "bc.w3", "bc.b3"};
}

inline std::vector<int> bc_param_shape(const BcConfig& cfg, const std::string& name) {
    const int in = cfg.input_dim(), h = cfg.hidden_dim();
    if (name == "bc.w1") return {in, h};
    if (name == "bc.b1") return {h};
    if (name == "bc.w2") return {h, h};
    if (name == "bc.b2") return {h};
    if (name == "bc.w3") return {h, 1};
    if (name == "bc.b3") return {1};
    throw Error("MissingParameter", name);
}

template <typename T>
ad::ParamSetT<T> init_bc_params(const BcConfig& cfg, SeededRng rng) {
    ad::ParamSetT<T> params;
    for (const auto& name : bc_param_names()) {
        auto shape = bc_param_shape(cfg, name);
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        std::vector<T> values(n, T(0));
        if (name.find(".w") != std::string::npos)
            for (auto& v : values) v = static_cast<T>(rng.uniform(-0.05, 0.05));
        params.items.push_back({name, shape, std::move(values)});
    }
    return params;
}

// features [N, 4d] -> inlier probabilities [N], each in (0, 1)
template <typename T>
ad::TensorT<T> bc_forward(ad::TapeT<T>& tape, const enc::BoundParams<T>& bp,
                          const ad::TensorT<T>& features) {
    if (features.rank() != 2) throw ad::ShapeMismatch("bc_forward expects a feature matrix");
    if (features.cols() != bp.at("bc.w1").rows())
        throw ad::ShapeMismatch("bc_forward feature width");
    auto h1 = tape.tanh(tape.add_rowvec(tape.matmul(features, bp.at("bc.w1")), bp.at("bc.b1")));
    auto h2 = tape.tanh(tape.add_rowvec(tape.matmul(h1, bp.at("bc.w2")), bp.at("bc.b2")));
    auto out = tape.sigmoid(tape.add_rowvec(tape.matmul(h2, bp.at("bc.w3")), bp.at("bc.b3")));
    return tape.reshape(out, {features.rows()});
}

// (1/N) * sum over all N batch samples of -[y log p + (1-y) log(1-p)],
// probabilities clamped at kBceProbEps before the logs
template <typename T>
ad::TensorT<T> bce_loss(ad::TapeT<T>& tape, const ad::TensorT<T>& probs,
                        const std::vector<int>& labels) {
    if (probs.rank() != 1) throw ad::ShapeMismatch("bce_loss expects a probability vector");
    const int n = probs.numel();
    if (static_cast<int>(labels.size()) != n) throw ad::ShapeMismatch("labels length mismatch");
    std::vector<T> y(static_cast<std::size_t>(n)), ny(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] != 0 && labels[static_cast<std::size_t>(i)] != 1)
            throw ad::OutOfRange("labels must be 0 or 1");
        y[static_cast<std::size_t>(i)] = static_cast<T>(labels[static_cast<std::size_t>(i)]);
        ny[static_cast<std::size_t>(i)] = T(1) - y[static_cast<std::size_t>(i)];
    }
    auto p = tape.clamp(probs, static_cast<T>(kBceProbEps), static_cast<T>(1.0 - kBceProbEps));
    auto one_minus_p = tape.add_scalar(tape.neg(p), T(1));
    auto term = tape.add(tape.mul(tape.vec(std::move(y)), tape.log(p)),
                         tape.mul(tape.vec(std::move(ny)), tape.log(one_minus_p)));
    return tape.scale(tape.sum_all(term), static_cast<T>(-1.0 / n));
}

// cl + lambda * bc
template <typename T>
ad::TensorT<T> joint_loss(ad::TapeT<T>& tape, const ad::TensorT<T>& cl, const ad::TensorT<T>& bc,
                          double lambda) {
    if (lambda < 0) throw ad::OutOfRange("lambda must be >= 0");
    return tape.add(cl, tape.scale(bc, static_cast<T>(lambda)));
}

} // namespace cood::losses
