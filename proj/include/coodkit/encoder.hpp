#pragma once

// Parameter-shared Siamese sequence encoder. One parameter set encodes both
// comments and code: token + learned positional embeddings feed L pre-norm
// bidirectional self-attention blocks, and the last-layer states of the real
// (non-PAD) tokens are mean-pooled into a d-dimensional feature vector.
//
// PAD handling: sequences are truncated to their true length before
// embedding, which masks PAD out of both attention and pooling.

#include <cmath>
#include <string>
#include <vector>

#include "coodkit/common.hpp"
#include "coodkit/corpus.hpp"
#include "coodkit/optim.hpp"
#include "coodkit/rng.hpp"
#include "coodkit/tensor.hpp"

namespace cood::enc {

COOD_DEFINE_ERROR(LengthZero);
COOD_DEFINE_ERROR(BadConfig);

struct EncoderConfig {
    int vocab_size = 0;
    int embed_dim = 64;
    int layers = 2;
    int heads = 4;
    int ffn_dim = 256;  // 4 * embed_dim
    int max_len_comment = corpus::kDefaultMaxCommentLen;
    int max_len_code = corpus::kDefaultMaxCodeLen;
    double dropout = 0.0;  // kept at 0 for determinism

    int max_len() const { return std::max(max_len_comment, max_len_code); }
    void validate() const {
        if (vocab_size < 2) throw BadConfig("vocab_size must be >= 2");
        if (layers < 1) throw BadConfig("layers must be >= 1");
        if (heads < 1 || embed_dim % heads != 0)
            throw BadConfig("embed_dim must be divisible by heads");
        if (ffn_dim < 1 || max_len_comment < 1 || max_len_code < 1)
            throw BadConfig("dims must be positive");
        if (dropout != 0.0) throw BadConfig("dropout is fixed at 0");
    }
};

inline std::vector<std::string> encoder_param_names(const EncoderConfig& cfg) {
    std::vector<std::string> names = {"tok_emb", "pos_emb"};
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        for (const char* s : {"ln1_g", "ln1_b", "wq", "wk", "wv", "wo", "ln2_g", "ln2_b",
                              "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2"})
            names.push_back(p + s);
    }
    names.push_back("final_ln_g");
    names.push_back("final_ln_b");
    return names;
}

inline std::vector<int> encoder_param_shape(const EncoderConfig& cfg, const std::string& name) {
    const int d = cfg.embed_dim, f = cfg.ffn_dim;
    auto ends_with = [&](const char* s) {
        const std::string suf(s);
        return name.size() >= suf.size() &&
               name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (name == "tok_emb") return {cfg.vocab_size, d};
    if (name == "pos_emb") return {cfg.max_len(), d};
    if (ends_with("wq") || ends_with("wk") || ends_with("wv") || ends_with("wo")) return {d, d};
    if (ends_with("ffn_w1")) return {d, f};
    if (ends_with("ffn_b1")) return {f};
    if (ends_with("ffn_w2")) return {f, d};
    if (ends_with("ffn_b2")) return {d};
    // layer-norm gains/biases
    return {d};
}

// Embeddings and projection matrices uniform(-0.05, 0.05) from the seeded
// stream in canonical parameter order; layer-norm gains 1; all biases 0.
template <typename T>
ad::ParamSetT<T> init_encoder_params(const EncoderConfig& cfg, SeededRng rng) {
    cfg.validate();
    ad::ParamSetT<T> params;
    for (const auto& name : encoder_param_names(cfg)) {
        auto shape = encoder_param_shape(cfg, name);
        std::size_t n = 1;
        for (int dd : shape) n *= static_cast<std::size_t>(dd);
        std::vector<T> values(n);
        const bool is_gain = name.size() >= 2 && name.compare(name.size() - 2, 2, "_g") == 0;
        const bool is_bias = (name.size() >= 2 && name.compare(name.size() - 2, 2, "_b") == 0) ||
                             name.find("ffn_b") != std::string::npos;
        if (is_gain) {
            std::fill(values.begin(), values.end(), T(1));
        } else if (is_bias) {
            std::fill(values.begin(), values.end(), T(0));
        } else {
            for (auto& v : values) v = static_cast<T>(rng.uniform(-0.05, 0.05));
        }
        params.items.push_back({name, shape, std::move(values)});
    }
    return params;
}

inline std::size_t encoder_param_count(const EncoderConfig& cfg) {
    std::size_t n = 0;
    for (const auto& name : encoder_param_names(cfg)) {
        std::size_t k = 1;
        for (int d : encoder_param_shape(cfg, name)) k *= static_cast<std::size_t>(d);
        n += k;
    }
    return n;
}

// Leaf tensors for one batch, bound in the same order as the ParamSet.
template <typename T>
struct BoundParams {
    std::vector<ad::TensorT<T>> leaves;  // parallel to ParamSet items
    const ad::ParamSetT<T>* source = nullptr;

    const ad::TensorT<T>& at(const std::string& name) const {
        const int i = source->index_of(name);
        if (i < 0) throw Error("MissingParameter", name);
        return leaves[static_cast<std::size_t>(i)];
    }
};

template <typename T>
BoundParams<T> bind_params(ad::TapeT<T>& tape, const ad::ParamSetT<T>& params,
                           bool trainable = true) {
    BoundParams<T> bound;
    bound.source = &params;
    for (const auto& p : params.items)
        bound.leaves.push_back(trainable ? tape.leaf(p.shape, p.values)
                                         : tape.constant(p.shape, p.values));
    return bound;
}

// Encodes the first `len` ids of a sequence into a pooled [d] vector.
// `skip_final_ln` plus layers == 0 is a debug hook that reduces the encoder
// to a mean over token+position embeddings.
template <typename T>
ad::TensorT<T> encode_sequence(ad::TapeT<T>& tape, const BoundParams<T>& bp,
                               const EncoderConfig& cfg, const std::vector<int>& ids, int len,
                               bool skip_final_ln = false) {
    if (len < 1) throw LengthZero("cannot encode an empty sequence");
    if (len > static_cast<int>(ids.size())) throw ad::ShapeMismatch("len exceeds id buffer");
    if (len > cfg.max_len()) throw ad::ShapeMismatch("len exceeds positional table");
    std::vector<int> real(ids.begin(), ids.begin() + len);
    std::vector<int> positions(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;

    const int d = cfg.embed_dim;
    const int heads = cfg.heads;
    const int dh = d / heads;
    const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(dh));

    auto x = tape.add(tape.embedding(bp.at("tok_emb"), real),
                      tape.embedding(bp.at("pos_emb"), positions));

    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        // pre-norm multi-head bidirectional self-attention
        auto a = tape.layer_norm(x, bp.at(p + "ln1_g"), bp.at(p + "ln1_b"));
        auto q = tape.matmul(a, bp.at(p + "wq"));
        auto k = tape.matmul(a, bp.at(p + "wk"));
        auto v = tape.matmul(a, bp.at(p + "wv"));
        std::vector<ad::TensorT<T>> head_outs;
        for (int h = 0; h < heads; ++h) {
            auto qh = tape.slice_cols(q, h * dh, dh);
            auto kh = tape.slice_cols(k, h * dh, dh);
            auto vh = tape.slice_cols(v, h * dh, dh);
            auto scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
            auto attn = tape.row_softmax(scores);
            head_outs.push_back(tape.matmul(attn, vh));
        }
        auto merged = tape.concat_last(head_outs);
        x = tape.add(x, tape.matmul(merged, bp.at(p + "wo")));
        // pre-norm FFN, tanh activation
        auto b = tape.layer_norm(x, bp.at(p + "ln2_g"), bp.at(p + "ln2_b"));
        auto h1 = tape.tanh(tape.add_rowvec(tape.matmul(b, bp.at(p + "ffn_w1")),
                                            bp.at(p + "ffn_b1")));
        auto h2 = tape.add_rowvec(tape.matmul(h1, bp.at(p + "ffn_w2")), bp.at(p + "ffn_b2"));
        x = tape.add(x, h2);
    }
    if (!skip_final_ln && cfg.layers > 0)
        x = tape.layer_norm(x, bp.at("final_ln_g"), bp.at("final_ln_b"));
    return tape.mean_rows(x);
}

// One shared parameter set, two encode calls: (v_t, v_c).
template <typename T>
std::pair<ad::TensorT<T>, ad::TensorT<T>> encode_bimodal(ad::TapeT<T>& tape,
                                                         const BoundParams<T>& bp,
                                                         const EncoderConfig& cfg,
                                                         const corpus::EncodedPair& pair) {
    auto v_t = encode_sequence(tape, bp, cfg, pair.comment_ids, pair.comment_len);
    auto v_c = encode_sequence(tape, bp, cfg, pair.code_ids, pair.code_len);
    return {v_t, v_c};
}

// (v_t, v_c, v_t - v_c, v_t + v_c), concatenated in exactly that order
template <typename T>
ad::TensorT<T> bc_input_features(ad::TapeT<T>& tape, const ad::TensorT<T>& v_t,
                                 const ad::TensorT<T>& v_c) {
    if (v_t.shape != v_c.shape) throw ad::ShapeMismatch("feature dims differ");
    return tape.concat_last({v_t, v_c, tape.sub(v_t, v_c), tape.add(v_t, v_c)});
}

// matrix form: rows are per-pair features
template <typename T>
ad::TensorT<T> bc_input_features_batch(ad::TapeT<T>& tape, const ad::TensorT<T>& vt_rows,
                                       const ad::TensorT<T>& vc_rows) {
    if (vt_rows.shape != vc_rows.shape) throw ad::ShapeMismatch("feature dims differ");
    return tape.concat_last(
        {vt_rows, vc_rows, tape.sub(vt_rows, vc_rows), tape.add(vt_rows, vc_rows)});
}

} // namespace cood::enc
