#include "coodkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace cood::pipeline {

using corpus::BimodalPair;
using corpus::Corpus;
using corpus::EncodedPair;
using corpus::Scenario;
using nlohmann::json;

const char* mode_name(Mode m) { return m == Mode::cood ? "cood" : "cood_plus"; }

Mode mode_from_name(const std::string& name) {
    if (name == "cood") return Mode::cood;
    if (name == "cood_plus" || name == "cood-plus") return Mode::cood_plus;
    throw BadMode(name);
}

void RunConfig::validate() const {
    if (embed_dim < 1 || layers < 1 || heads < 1 || ffn_dim < 1)
        throw BadMode("encoder dims must be positive");
    if (embed_dim % heads != 0) throw BadMode("embed_dim must be divisible by heads");
    if (max_len_comment < 1 || max_len_code < 1) throw BadMode("max lens must be positive");
    if (vocab_max_size < 3 || vocab_min_freq < 1) throw BadMode("bad vocab settings");
    if (!(tau > 0)) throw BadMode("tau must be positive");
    if (margin < 0 || lambda < 0) throw BadMode("margin and lambda must be >= 0");
    if (batch_size < 2) throw BadMode("batch_size must be >= 2");
    if (epochs < 0) throw BadMode("epochs must be >= 0");
    if (base_lr < 0) throw BadMode("base_lr must be >= 0");
    if (!(warmup_fraction > 0 && warmup_fraction < 1))
        throw BadMode("warmup_fraction must be in (0,1)");
    if (!(val_fraction >= 0 && val_fraction < 0.5))
        throw BadMode("val_fraction must be in [0, 0.5)");
}

enc::EncoderConfig RunConfig::encoder_config(int vocab_size) const {
    enc::EncoderConfig e;
    e.vocab_size = vocab_size;
    e.embed_dim = embed_dim;
    e.layers = layers;
    e.heads = heads;
    e.ffn_dim = ffn_dim;
    e.max_len_comment = max_len_comment;
    e.max_len_code = max_len_code;
    return e;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["mode"] = mode_name(cfg.mode);
    j["embed_dim"] = cfg.embed_dim;
    j["layers"] = cfg.layers;
    j["heads"] = cfg.heads;
    j["ffn_dim"] = cfg.ffn_dim;
    j["max_len_comment"] = cfg.max_len_comment;
    j["max_len_code"] = cfg.max_len_code;
    j["vocab_max_size"] = cfg.vocab_max_size;
    j["vocab_min_freq"] = cfg.vocab_min_freq;
    j["vocab_cover_foreign"] = cfg.vocab_cover_foreign;
    j["tau"] = cfg.tau;
    j["margin"] = cfg.margin;
    j["lambda"] = cfg.lambda;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["base_lr"] = cfg.base_lr;
    j["warmup_fraction"] = cfg.warmup_fraction;
    j["val_fraction"] = cfg.val_fraction;
    j["seed"] = cfg.seed;
    j["warm_start"] = cfg.warm_start;
    return j.dump();
}

RunConfig run_config_from_json(const std::string& text) {
    json j = json::parse(text);
    RunConfig cfg;
    if (j.contains("mode")) cfg.mode = mode_from_name(j.at("mode").get<std::string>());
    auto get_int = [&](const char* k, int& slot) {
        if (j.contains(k)) slot = j.at(k).get<int>();
    };
    auto get_double = [&](const char* k, double& slot) {
        if (j.contains(k)) slot = j.at(k).get<double>();
    };
    get_int("embed_dim", cfg.embed_dim);
    get_int("layers", cfg.layers);
    get_int("heads", cfg.heads);
    get_int("ffn_dim", cfg.ffn_dim);
    get_int("max_len_comment", cfg.max_len_comment);
    get_int("max_len_code", cfg.max_len_code);
    get_int("vocab_max_size", cfg.vocab_max_size);
    get_int("vocab_min_freq", cfg.vocab_min_freq);
    if (j.contains("vocab_cover_foreign"))
        cfg.vocab_cover_foreign = j.at("vocab_cover_foreign").get<bool>();
    get_double("tau", cfg.tau);
    get_double("margin", cfg.margin);
    get_double("lambda", cfg.lambda);
    get_int("batch_size", cfg.batch_size);
    get_int("epochs", cfg.epochs);
    get_double("base_lr", cfg.base_lr);
    get_double("warmup_fraction", cfg.warmup_fraction);
    get_double("val_fraction", cfg.val_fraction);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("warm_start")) cfg.warm_start = j.at("warm_start").get<std::string>();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

// ---- checkpoint binary format ----
//
// magic "COODCKPT" | u32 version | u32 len + config snapshot JSON |
// u64 step | f64 final loss | u32 param count | per tensor:
// u32 len + name, u32 rank, u32 dims..., f32-LE payload.

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}
void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CorruptPayload("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string out;
    out.append(kCheckpointMagic, 8);
    put_u32(out, kCheckpointVersion);

    json snapshot;
    snapshot["run_config"] = json::parse(run_config_to_json(ckpt.config));
    snapshot["vocab"] = json::parse(corpus::vocab_to_json(ckpt.vocab));
    const std::string snap = snapshot.dump();
    put_u32(out, static_cast<std::uint32_t>(snap.size()));
    out += snap;

    put_u64(out, ckpt.step);
    put_f64(out, ckpt.final_loss);
    put_u32(out, static_cast<std::uint32_t>(ckpt.params.items.size()));
    for (const auto& p : ckpt.params.items) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out += p.name;
        put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
        std::size_t numel = 1;
        for (int d : p.shape) {
            put_u32(out, static_cast<std::uint32_t>(d));
            numel *= static_cast<std::size_t>(d);
        }
        if (numel != p.values.size()) throw CorruptPayload("tensor numel mismatch on save");
        for (float v : p.values) put_f32(out, v);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("IoError", "cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("IoError", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    Reader r{buf};
    r.need(8);
    if (std::memcmp(buf.data(), kCheckpointMagic, 8) != 0)
        throw BadMagic("not a coodkit checkpoint");
    r.pos = 8;
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw VersionUnsupported("checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    const std::uint32_t snap_len = r.u32();
    const std::string snap = r.str(snap_len);
    json j;
    try {
        j = json::parse(snap);
    } catch (const json::exception& e) {
        throw CorruptPayload(std::string("config snapshot: ") + e.what());
    }
    ckpt.config = run_config_from_json(j.at("run_config").dump());
    ckpt.vocab = corpus::vocab_from_json(j.at("vocab").dump());
    ckpt.step = r.u64();
    ckpt.final_loss = r.f64();

    const std::uint32_t n_params = r.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        ad::NamedTensor<float> t;
        t.name = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            t.shape.push_back(static_cast<int>(r.u32()));
            numel *= static_cast<std::size_t>(t.shape.back());
        }
        t.values.resize(numel);
        for (std::size_t k = 0; k < numel; ++k) t.values[k] = r.f32();
        ckpt.params.items.push_back(std::move(t));
    }
    if (r.pos != buf.size()) throw CorruptPayload("trailing bytes after payload");
    return ckpt;
}

Checkpoint init_checkpoint(const RunConfig& cfg, const corpus::Vocabulary& vocab) {
    cfg.validate();
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.vocab = vocab;
    SeededRng root(cfg.seed);
    ckpt.params = enc::init_encoder_params<float>(cfg.encoder_config(vocab.size()),
                                                  root.derive("enc-init"));
    if (cfg.mode == Mode::cood_plus) {
        auto bc = losses::init_bc_params<float>(losses::BcConfig{cfg.embed_dim},
                                                root.derive("bc-init"));
        for (auto& t : bc.items) ckpt.params.items.push_back(std::move(t));
    }
    return ckpt;
}

// ---- training ----

namespace {

struct Batch {
    std::vector<const EncodedPair*> pairs;
    std::vector<int> labels;
};

// loss over one batch; builds the full graph on the given tape
template <typename T>
ad::TensorT<T> batch_loss(ad::TapeT<T>& tape, const enc::BoundParams<T>& bound,
                          const enc::EncoderConfig& ecfg, const RunConfig& cfg,
                          const Batch& batch) {
    std::vector<ad::TensorT<T>> vt_list, vc_list;
    for (const auto* ep : batch.pairs) {
        auto [vt, vc] = enc::encode_bimodal(tape, bound, ecfg, *ep);
        vt_list.push_back(vt);
        vc_list.push_back(vc);
    }
    auto vt_rows = tape.stack_rows(vt_list);
    auto vc_rows = tape.stack_rows(vc_list);
    auto sims = losses::cosine_matrix(tape, vt_rows, vc_rows);
    const int n = static_cast<int>(batch.pairs.size());

    if (cfg.mode == Mode::cood) return losses::info_nce(tape, sims, cfg.tau);

    std::vector<int> id_idx, ood_idx;
    for (int i = 0; i < n; ++i)
        (batch.labels[static_cast<std::size_t>(i)] == 1 ? id_idx : ood_idx).push_back(i);
    auto lid = losses::margin_id_loss(tape, sims, id_idx, cfg.margin);
    auto lood = losses::margin_ood_loss(tape, sims, ood_idx, cfg.margin);
    auto cl = losses::cl_loss(tape, lid, lood, n);
    auto feats = enc::bc_input_features_batch(tape, vt_rows, vc_rows);
    auto probs = losses::bc_forward(tape, bound, feats);
    auto bce = losses::bce_loss(tape, probs, batch.labels);
    return losses::joint_loss(tape, cl, bce, cfg.lambda);
}

} // namespace

Checkpoint train(const RunConfig& cfg, const std::string& manifest_dir, std::ostream* log) {
    cfg.validate();
    auto manifest = scenarios::load_manifest(manifest_dir);
    const std::string rel =
        cfg.mode == Mode::cood ? manifest.train_cood_path : manifest.train_cood_plus_path;
    Corpus train_corpus =
        corpus::load_jsonl(scenarios::manifest_file_path(manifest_dir, rel));
    if (train_corpus.empty()) throw scenarios::InsufficientCorpus("empty train split");
    if (cfg.mode == Mode::cood)
        for (const auto& p : train_corpus)
            if (p.label != 1)
                throw Error("OodRowInCoodTrain", "cood training split contains OOD row " + p.id);

    corpus::Vocabulary vocab;
    std::optional<Checkpoint> base;
    if (!cfg.warm_start.empty()) {
        base = load_checkpoint(cfg.warm_start);
        if (base->config.embed_dim != cfg.embed_dim || base->config.layers != cfg.layers ||
            base->config.heads != cfg.heads || base->config.ffn_dim != cfg.ffn_dim)
            throw BadMode("warm_start checkpoint has a different encoder shape");
        vocab = base->vocab;
    } else {
        Corpus vocab_basis = train_corpus;
        if (cfg.vocab_cover_foreign && !manifest.foreign_corpus_path.empty()) {
            Corpus foreign = corpus::load_jsonl(manifest.foreign_corpus_path);
            vocab_basis.insert(vocab_basis.end(), foreign.begin(), foreign.end());
        } else if (cfg.vocab_cover_foreign && log) {
            *log << "warning: no foreign corpus recorded; vocabulary covers ID tokens only\n";
        }
        vocab = corpus::build_vocab(vocab_basis, cfg.vocab_min_freq, cfg.vocab_max_size);
    }
    Checkpoint ckpt = init_checkpoint(cfg, vocab);
    if (base) {
        for (auto& item : ckpt.params.items) {
            const int src = base->params.index_of(item.name);
            if (src < 0) continue;  // e.g. a bc head absent from a cood base
            const auto& donor = base->params.items[static_cast<std::size_t>(src)];
            if (donor.shape != item.shape)
                throw BadMode("warm_start tensor shape mismatch for " + item.name);
            item.values = donor.values;
        }
    }
    const enc::EncoderConfig ecfg = cfg.encoder_config(vocab.size());

    std::vector<EncodedPair> encoded;
    std::vector<int> labels;
    encoded.reserve(train_corpus.size());
    for (const auto& p : train_corpus) {
        encoded.push_back(corpus::encode_pair(p, vocab, cfg.max_len_comment, cfg.max_len_code));
        labels.push_back(p.label);
    }

    SeededRng root(cfg.seed);
    auto order = root.derive("val-split").sample_indices(encoded.size(), encoded.size());
    const std::size_t n_val =
        static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(order.size())));
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
    if (train_idx.size() < 2) throw scenarios::InsufficientCorpus("train split too small");

    const std::int64_t batches_per_epoch =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(train_idx.size()) / cfg.batch_size);
    const std::int64_t total_steps = std::max<std::int64_t>(1, batches_per_epoch * cfg.epochs);

    auto make_batches = [&](const std::vector<std::size_t>& idx) {
        std::vector<Batch> batches;
        for (std::size_t start = 0; start < idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            if (end - start < 2) break;  // a 1-pair batch has no in-batch negatives
            Batch b;
            for (std::size_t i = start; i < end; ++i) {
                b.pairs.push_back(&encoded[idx[i]]);
                b.labels.push_back(labels[idx[i]]);
            }
            batches.push_back(std::move(b));
        }
        return batches;
    };

    auto validation_loss = [&]() -> double {
        if (val_idx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        auto batches = make_batches(val_idx);
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& b : batches) {
            ad::Tape tape;
            auto bound = enc::bind_params(tape, ckpt.params, /*trainable=*/false);
            total += static_cast<double>(batch_loss(tape, bound, ecfg, cfg, b).scalar_value());
            ++count;
        }
        return count ? total / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
    };

    ad::ParamSet best_params = ckpt.params;
    double best_val = std::numeric_limits<double>::infinity();
    std::uint64_t best_step = 0;
    auto adam = ad::AdamState::init(ckpt.params);
    std::int64_t step = 0;

    {
        const double v0 = validation_loss();
        if (!std::isnan(v0)) {
            best_val = v0;
            if (log) *log << "epoch 0 (untrained) val_loss " << v0 << "\n";
        }
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto epoch_order = train_idx;
        root.derive("epoch").derive(static_cast<std::uint64_t>(epoch)).shuffle(epoch_order);
        auto batches = make_batches(epoch_order);
        double epoch_loss = 0.0;
        std::size_t ood_seen = 0, used = 0;
        for (const auto& b : batches) {
            for (int l : b.labels)
                if (l == 0) ++ood_seen;
            if (cfg.mode == Mode::cood_plus &&
                std::all_of(b.labels.begin(), b.labels.end(), [](int l) { return l == 0; })) {
                ++step;  // a batch with no ID pairs has no margin anchor
                continue;
            }
            ad::Tape tape;
            auto bound = enc::bind_params(tape, ckpt.params, /*trainable=*/true);
            auto loss = batch_loss(tape, bound, ecfg, cfg, b);
            const double lv = static_cast<double>(loss.scalar_value());
            if (!std::isfinite(lv))
                throw NonFiniteLoss("step " + std::to_string(step) + " loss " +
                                    std::to_string(lv));
            epoch_loss += lv;
            ++used;
            tape.backward(loss);
            const double lr = ad::warmup_linear_lr(std::min(step, total_steps), total_steps,
                                                   cfg.base_lr, cfg.warmup_fraction);
            if (lr > 0.0) {
                std::vector<std::vector<float>> grads;
                grads.reserve(bound.leaves.size());
                for (const auto& leaf : bound.leaves) grads.push_back(tape.grad(leaf));
                ad::adam_step(adam, ckpt.params, grads, static_cast<float>(lr));
            }
            ++step;
        }
        const double val = validation_loss();
        if (log) {
            *log << "epoch " << (epoch + 1) << " train_loss "
                 << (used ? epoch_loss / static_cast<double>(used) : 0.0) << " val_loss " << val
                 << "\n";
            if (cfg.mode == Mode::cood_plus && ood_seen == 0)
                *log << "warning: AllOneClass: epoch " << (epoch + 1) << " saw no OOD rows\n";
        }
        if (!std::isnan(val) && val < best_val) {
            best_val = val;
            best_params = ckpt.params;
            best_step = static_cast<std::uint64_t>(step);
        }
    }

    if (std::isinf(best_val)) {
        // no usable validation split: keep the final parameters
        best_params = ckpt.params;
        best_val = std::numeric_limits<double>::quiet_NaN();
        best_step = static_cast<std::uint64_t>(step);
    }
    ckpt.params = std::move(best_params);
    ckpt.step = best_step;
    ckpt.final_loss = best_val;
    return ckpt;
}

// ---- scoring ----

namespace {

struct ModelView {
    const Checkpoint& ckpt;
    enc::EncoderConfig ecfg;
    bool has_bc;

    explicit ModelView(const Checkpoint& c)
        : ckpt(c),
          ecfg(c.config.encoder_config(c.vocab.size())),
          has_bc(c.config.mode == Mode::cood_plus) {}

    // forward-only embeddings on a local tape
    std::pair<std::vector<double>, std::vector<double>> embed(const BimodalPair& pair) const {
        ad::Tape tape;
        auto bound = enc::bind_params(tape, ckpt.params, /*trainable=*/false);
        auto ep = corpus::encode_pair(pair, ckpt.vocab, ckpt.config.max_len_comment,
                                      ckpt.config.max_len_code);
        auto [vt, vc] = enc::encode_bimodal(tape, bound, ecfg, ep);
        std::vector<double> t(vt.values.begin(), vt.values.end());
        std::vector<double> c(vc.values.begin(), vc.values.end());
        return {std::move(t), std::move(c)};
    }

    scoring::ScoredRecord score(const BimodalPair& pair) const {
        ad::Tape tape;
        auto bound = enc::bind_params(tape, ckpt.params, /*trainable=*/false);
        auto ep = corpus::encode_pair(pair, ckpt.vocab, ckpt.config.max_len_comment,
                                      ckpt.config.max_len_code);
        auto [vt, vc] = enc::encode_bimodal(tape, bound, ecfg, ep);
        const double sim = static_cast<double>(tape.cosine(vt, vc).scalar_value());
        double p_bc = -1.0;
        if (has_bc) {
            auto feats = enc::bc_input_features_batch(tape, tape.stack_rows({vt}),
                                                      tape.stack_rows({vc}));
            p_bc = static_cast<double>(
                losses::bc_forward(tape, bound, feats).values[0]);
        }
        return scoring::make_scored(pair.id, sim, p_bc, pair.label,
                                    corpus::scenario_name(pair.scenario));
    }
};

} // namespace

scoring::ScoredRecord score_pair(const Checkpoint& ckpt, const BimodalPair& pair) {
    return ModelView(ckpt).score(pair);
}

std::pair<std::vector<double>, std::vector<double>> embed_pair(const Checkpoint& ckpt,
                                                               const BimodalPair& pair) {
    return ModelView(ckpt).embed(pair);
}

void score_file(const Checkpoint& ckpt, const std::string& in_jsonl,
                const std::string& out_csv) {
    ModelView view(ckpt);
    Corpus rows = corpus::load_jsonl(in_jsonl);
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + out_csv);
    out << scoring::scored_csv_header() << "\n";
    for (const auto& p : rows) out << scoring::scored_csv_row(view.score(p)) << "\n";
}

// ---- evaluation ----

int worker_threads() {
    const char* env = std::getenv("COODKIT_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

EvalResult evaluate_run(const Checkpoint& ckpt, const std::string& manifest_dir) {
    auto manifest = scenarios::load_manifest(manifest_dir);
    if (manifest.test_scenarios.empty()) throw ScenarioMissing("manifest has no test scenarios");
    ModelView view(ckpt);

    struct Task {
        std::string scenario;
        int seed;
        std::string path;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < manifest.test_scenarios.size(); ++s)
        for (std::size_t k = 0; k < manifest.test_paths[s].size(); ++k)
            tasks.push_back({manifest.test_scenarios[s], static_cast<int>(k),
                             scenarios::manifest_file_path(manifest_dir,
                                                           manifest.test_paths[s][k])});

    std::vector<metrics::MetricsRow> rows(tasks.size());
    auto run_task = [&](std::size_t t) {
        Corpus data = corpus::load_jsonl(tasks[t].path);
        std::vector<double> id_scores, ood_scores;
        for (const auto& p : data) {
            const auto sr = view.score(p);
            (p.label == 1 ? id_scores : ood_scores).push_back(sr.p_id);
        }
        metrics::MetricsRow row;
        row.scenario = tasks[t].scenario;
        row.seed = tasks[t].seed;
        row.auroc = metrics::auroc(id_scores, ood_scores);
        row.fpr95 = metrics::fpr_at_95_tpr(id_scores, ood_scores);
        row.n_id = static_cast<int>(id_scores.size());
        row.n_ood = static_cast<int>(ood_scores.size());
        rows[t] = row;
    };

    const int n_threads = std::min<int>(worker_threads(), static_cast<int>(tasks.size()));
    if (n_threads <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1))
                    run_task(t);
            });
        for (auto& th : pool) th.join();
    }

    EvalResult result;
    result.rows = rows;
    for (const auto& scenario : manifest.test_scenarios) {
        std::vector<metrics::MetricsRow> group;
        for (const auto& r : rows)
            if (r.scenario == scenario) group.push_back(r);
        if (group.size() >= 2) result.aggregates.push_back(metrics::seed_average(group));
    }
    return result;
}

void write_eval_csv(const EvalResult& result, const std::string& rows_csv_path,
                    const std::string& aggregate_csv_path) {
    std::ofstream rows_out(rows_csv_path, std::ios::binary);
    if (!rows_out) throw Error("IoError", "cannot write " + rows_csv_path);
    rows_out << metrics::metrics_csv_header() << "\n";
    for (const auto& r : result.rows) rows_out << metrics::metrics_csv_row(r) << "\n";

    std::ofstream agg_out(aggregate_csv_path, std::ios::binary);
    if (!agg_out) throw Error("IoError", "cannot write " + aggregate_csv_path);
    agg_out << metrics::aggregate_csv_header() << "\n";
    for (const auto& a : result.aggregates) agg_out << metrics::aggregate_csv_row(a) << "\n";
}

// ---- code-search experiment ----

std::vector<metrics::SearchEvalRow> search_eval(const Checkpoint& ckpt,
                                                const std::string& manifest_dir,
                                                double corruption, double retention,
                                                const PairScorer& scorer) {
    if (!(corruption >= 0.0 && corruption < 0.5))
        throw Error("BadCorruption", "corruption must be in [0, 0.5)");
    auto manifest = scenarios::load_manifest(manifest_dir);
    Corpus test_pool =
        corpus::load_jsonl(scenarios::manifest_file_path(manifest_dir, manifest.test_id_path));
    const std::size_t n = test_pool.size();
    if (n < 20) throw scenarios::InsufficientCorpus("test pool too small for search-eval");

    ModelView view(ckpt);
    SeededRng root(SeededRng(manifest.seed).derive("search-eval"));

    const int per_scen = static_cast<int>(std::lround(corruption / 3.0 * static_cast<double>(n)));

    // corrupted set: three victim groups replaced in place
    Corpus corrupted = test_pool;
    if (per_scen > 0) {
        auto victims = root.derive("victims").sample_indices(n, static_cast<std::size_t>(3 * per_scen));
        Corpus group2, group3;
        for (int i = 0; i < per_scen; ++i)
            group2.push_back(test_pool[victims[static_cast<std::size_t>(per_scen + i)]]);
        for (int i = 0; i < per_scen; ++i)
            group3.push_back(test_pool[victims[static_cast<std::size_t>(2 * per_scen + i)]]);

        Corpus foreign =
            corpus::load_jsonl(manifest.foreign_corpus_path);
        auto [foreign_train, foreign_test] = scenarios::split_foreign_pools(foreign, manifest);
        auto od = scenarios::gen_out_domain(test_pool, foreign_test, per_scen,
                                            root.derive("od"));
        auto shf = scenarios::gen_shuffled_comment(group2, per_scen,
                                                   scenarios::kDefaultShuffleRatio,
                                                   root.derive("shf"));
        auto bug = scenarios::gen_buggy_code(group3, per_scen, root.derive("bug"));
        for (int i = 0; i < per_scen; ++i) {
            corrupted[victims[static_cast<std::size_t>(i)]] = od[static_cast<std::size_t>(i)];
            corrupted[victims[static_cast<std::size_t>(per_scen + i)]] =
                shf[static_cast<std::size_t>(i)];
            corrupted[victims[static_cast<std::size_t>(2 * per_scen + i)]] =
                bug[static_cast<std::size_t>(i)];
        }
    }

    // embeddings for retrieval: original pool plus corrupted replacements
    struct Embedded {
        std::vector<double> comment_vec, code_vec;
    };
    auto embed_corpus = [&](const Corpus& rows) {
        std::vector<Embedded> out(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto [t, c] = view.embed(rows[i]);
            out[i] = {std::move(t), std::move(c)};
        }
        return out;
    };

    auto mrr_of = [&](const Corpus& rows, const std::vector<Embedded>& embs) {
        std::vector<std::vector<double>> queries;
        std::vector<std::string> gold;
        std::vector<std::pair<std::string, std::vector<double>>> pool;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            queries.push_back(embs[i].comment_vec);
            gold.push_back(rows[i].id);
            pool.emplace_back(rows[i].id, embs[i].code_vec);
        }
        return metrics::mrr(queries, gold, pool);
    };

    auto original_embs = embed_corpus(test_pool);
    auto corrupted_embs = embed_corpus(corrupted);

    std::vector<metrics::SearchEvalRow> out;
    out.push_back({"original", mrr_of(test_pool, original_embs),
                   static_cast<int>(test_pool.size())});
    out.push_back({"corrupted", mrr_of(corrupted, corrupted_embs),
                   static_cast<int>(corrupted.size())});

    // (c) ground truth filter
    Corpus gt_rows;
    std::vector<Embedded> gt_embs;
    for (std::size_t i = 0; i < corrupted.size(); ++i)
        if (corrupted[i].label == 1) {
            gt_rows.push_back(corrupted[i]);
            gt_embs.push_back(corrupted_embs[i]);
        }
    out.push_back({"filtered_gt", mrr_of(gt_rows, gt_embs), static_cast<int>(gt_rows.size())});

    // (d) model filter: threshold calibrated on true-ID scores, filter by >=
    std::vector<scoring::ScoredRecord> scored(corrupted.size());
    for (std::size_t i = 0; i < corrupted.size(); ++i)
        scored[i] = scorer ? scorer(corrupted[i]) : view.score(corrupted[i]);
    std::vector<double> id_calibration;
    for (const auto& r : scored)
        if (r.label == 1) id_calibration.push_back(r.p_id);
    const double thresh = scoring::calibrate_threshold(id_calibration, retention);
    Corpus model_rows;
    std::vector<Embedded> model_embs;
    for (std::size_t i = 0; i < corrupted.size(); ++i)
        if (scored[i].p_id >= thresh) {
            model_rows.push_back(corrupted[i]);
            model_embs.push_back(corrupted_embs[i]);
        }
    out.push_back({"filtered_model", mrr_of(model_rows, model_embs),
                   static_cast<int>(model_rows.size())});
    return out;
}

void write_search_csv(const std::vector<metrics::SearchEvalRow>& rows,
                      const std::string& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + csv_path);
    out << metrics::search_csv_header() << "\n";
    for (const auto& r : rows) out << metrics::search_csv_row(r) << "\n";
}

} // namespace cood::pipeline
