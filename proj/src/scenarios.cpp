#include "coodkit/scenarios.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coodkit/minicode.hpp"

namespace cood::scenarios {

namespace fs = std::filesystem;
using corpus::BimodalPair;
using corpus::Corpus;
using corpus::Scenario;
using nlohmann::json;

// ---- scenario 1: out-domain ----

corpus::Corpus gen_out_domain(const Corpus& id_corpus, const Corpus& foreign_corpus, int n,
                              SeededRng rng) {
    Corpus sampled = corpus::length_matched_sample(id_corpus, foreign_corpus, n,
                                                   kLengthBinWidth, rng.derive("length-match"));
    int k = 0;
    for (auto& p : sampled) {
        p.scenario = Scenario::out_domain;
        p.label = 0;
        p.meta["source_id"] = p.id;
        p.id = "od_" + std::to_string(k++) + "_" + p.id;
    }
    return sampled;
}

// ---- scenario 2: misaligned ----

corpus::Corpus gen_misaligned(const Corpus& source, int n, SeededRng rng) {
    if (n < 2) throw TooFewPairs("derangement needs n >= 2, got " + std::to_string(n));
    if (static_cast<std::size_t>(n) > source.size())
        throw InsufficientCorpus("misaligned wants " + std::to_string(n) + " of " +
                                 std::to_string(source.size()));

    auto pick = rng.derive("sample");
    auto chosen_idx = pick.sample_indices(source.size(), static_cast<std::size_t>(n));
    std::vector<const BimodalPair*> chosen;
    for (auto i : chosen_idx) chosen.push_back(&source[i]);

    // sample permutations until none of the reassigned codes equals the
    // original code text; for n >= 2 with non-identical codes this terminates
    // quickly, and identical-code corner cases are rejected below
    auto perm_rng = rng.derive("derange");
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    const int kMaxTries = 10000;
    int tries = 0;
    for (;; ++tries) {
        if (tries >= kMaxTries)
            throw TooFewPairs("no code derangement exists for the sampled pairs");
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        perm_rng.shuffle(perm);
        bool ok = true;
        for (std::size_t i = 0; i < perm.size(); ++i)
            if (chosen[perm[i]]->code == chosen[i]->code) {
                ok = false;
                break;
            }
        if (ok) break;
    }

    Corpus out;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        BimodalPair p = *chosen[i];
        p.code = chosen[perm[i]]->code;
        p.scenario = Scenario::misaligned;
        p.label = 0;
        p.meta["comment_from"] = chosen[i]->id;
        p.meta["code_from"] = chosen[perm[i]]->id;
        p.id = "mis_" + std::to_string(i) + "_" + chosen[i]->id;
        out.push_back(std::move(p));
    }
    return out;
}

// ---- scenario 3: shuffled comment ----

namespace {

// Rotates k chosen eligible token positions by one. Returns false when no
// choice of positions can change at least two token values (e.g. all
// eligible tokens are the same word).
bool try_shuffle_comment(const std::string& comment, double ratio, SeededRng rng,
                         std::string& out) {
    auto tokens = corpus::tokenize_comment(comment);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!corpus::is_stopword(tokens[i])) eligible.push_back(i);
    if (eligible.size() < 2) return false;

    const int k = std::max<int>(
        2, static_cast<int>(std::lround(ratio * static_cast<double>(eligible.size()))));
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), eligible.size());

    for (int attempt = 0; attempt < 32; ++attempt) {
        auto sub = rng.derive(static_cast<std::uint64_t>(attempt));
        auto which = sub.sample_indices(eligible.size(), kk);
        std::vector<std::size_t> pos;
        for (auto w : which) pos.push_back(eligible[w]);
        std::sort(pos.begin(), pos.end());

        auto shuffled = tokens;
        for (std::size_t j = 0; j < pos.size(); ++j)
            shuffled[pos[j]] = tokens[pos[(j + pos.size() - 1) % pos.size()]];

        int changed = 0;
        for (std::size_t j = 0; j < pos.size(); ++j)
            if (shuffled[pos[j]] != tokens[pos[j]]) ++changed;
        if (changed < 2) continue;  // duplicate tokens rotated into themselves

        std::string text;
        for (std::size_t i = 0; i < shuffled.size(); ++i) {
            if (i) text += ' ';
            text += shuffled[i];
        }
        out = text;
        return true;
    }
    return false;
}

} // namespace

corpus::Corpus gen_shuffled_comment(const Corpus& source, int n, double ratio, SeededRng rng) {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw Error("BadRatio", "shuffle ratio must be in (0, 1]");
    auto order = rng.derive("order").sample_indices(source.size(), source.size());
    Corpus out;
    for (auto idx : order) {
        if (static_cast<int>(out.size()) >= n) break;
        const auto& src = source[idx];
        std::string shuffled;
        if (!try_shuffle_comment(src.comment, ratio, rng.derive(SeededRng::hash_str(src.id)),
                                 shuffled))
            continue;  // skipped and resampled from the remaining order
        BimodalPair p = src;
        p.comment = shuffled;
        p.scenario = Scenario::shuffled_comment;
        p.label = 0;
        p.meta["source_id"] = src.id;
        p.id = "shf_" + std::to_string(out.size()) + "_" + src.id;
        out.push_back(std::move(p));
    }
    if (static_cast<int>(out.size()) < n)
        throw InsufficientEligible("only " + std::to_string(out.size()) + " of " +
                                   std::to_string(n) + " comments are shufflable");
    return out;
}

// ---- scenario 4: buggy code ----

std::vector<std::pair<int, std::string>> mutation_candidates(const std::string& code) {
    std::vector<std::pair<int, std::string>> out;
    auto tokens = minicode::lex(code);
    minicode::ScopeReport rep = minicode::analyze_scope(tokens);
    const auto defs = rep.all_defs();
    if (defs.size() < 2) return out;
    for (const auto& use : rep.uses) {
        const std::string current = tokens[static_cast<std::size_t>(use.use_index)].text;
        for (const auto& def : defs) {
            if (def.name == current) continue;
            if (def.def_index >= use.use_index) continue;  // not yet in scope
            out.emplace_back(use.use_index, def.name);
        }
    }
    return out;
}

corpus::Corpus gen_buggy_code(const Corpus& source, int n, SeededRng rng) {
    auto order = rng.derive("order").sample_indices(source.size(), source.size());
    Corpus out;
    for (auto idx : order) {
        if (static_cast<int>(out.size()) >= n) break;
        const auto& src = source[idx];
        std::vector<std::pair<int, std::string>> candidates;
        try {
            candidates = mutation_candidates(src.code);
        } catch (const Error&) {
            continue;  // not minicode, skipped and resampled
        }
        if (candidates.empty()) continue;
        auto sub = rng.derive(SeededRng::hash_str(src.id));
        const auto& [use_index, new_name] =
            candidates[static_cast<std::size_t>(sub.next_below(candidates.size()))];
        BimodalPair p = src;
        p.code = minicode::splice_identifier(minicode::lex(src.code), use_index, new_name);
        p.scenario = Scenario::buggy_code;
        p.label = 0;
        p.meta["source_id"] = src.id;
        p.meta["misuse"] = new_name;
        p.id = "bug_" + std::to_string(out.size()) + "_" + src.id;
        out.push_back(std::move(p));
    }
    if (static_cast<int>(out.size()) < n)
        throw NoMutableRecords("only " + std::to_string(out.size()) + " of " +
                               std::to_string(n) + " records are mutable");
    return out;
}

// ---- manifest ----

std::string manifest_to_json(const BenchmarkManifest& m) {
    json j;
    j["seed"] = m.seed;
    j["id_train"] = m.id_train;
    j["id_test"] = m.id_test;
    j["train_ood_frac"] = m.train_ood_frac;
    j["test_ood_ratio"] = m.test_ood_ratio;
    j["n_test_seeds"] = m.n_test_seeds;
    j["generator_version"] = m.generator_version;
    j["train_cood_rows"] = m.train_cood_rows;
    j["train_cood_plus_rows"] = m.train_cood_plus_rows;
    j["test_rows_per_file"] = m.test_rows_per_file;
    j["train_cood_path"] = m.train_cood_path;
    j["train_cood_plus_path"] = m.train_cood_plus_path;
    j["test_id_path"] = m.test_id_path;
    j["test_scenarios"] = m.test_scenarios;
    j["test_paths"] = m.test_paths;
    j["id_corpus_path"] = m.id_corpus_path;
    j["foreign_corpus_path"] = m.foreign_corpus_path;
    return j.dump(2);
}

BenchmarkManifest manifest_from_json(const std::string& text) {
    json j = json::parse(text);
    BenchmarkManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.id_train = j.at("id_train").get<int>();
    m.id_test = j.at("id_test").get<int>();
    m.train_ood_frac = j.at("train_ood_frac").get<double>();
    m.test_ood_ratio = j.at("test_ood_ratio").get<double>();
    m.n_test_seeds = j.at("n_test_seeds").get<int>();
    m.generator_version = j.at("generator_version").get<std::string>();
    m.train_cood_rows = j.at("train_cood_rows").get<int>();
    m.train_cood_plus_rows = j.at("train_cood_plus_rows").get<int>();
    m.test_rows_per_file = j.at("test_rows_per_file").get<int>();
    m.train_cood_path = j.at("train_cood_path").get<std::string>();
    m.train_cood_plus_path = j.at("train_cood_plus_path").get<std::string>();
    m.test_id_path = j.at("test_id_path").get<std::string>();
    m.test_scenarios = j.at("test_scenarios").get<std::vector<std::string>>();
    m.test_paths = j.at("test_paths").get<std::vector<std::vector<std::string>>>();
    m.id_corpus_path = j.at("id_corpus_path").get<std::string>();
    m.foreign_corpus_path = j.at("foreign_corpus_path").get<std::string>();
    return m;
}

std::string manifest_file_path(const std::string& dir, const std::string& rel) {
    return (fs::path(dir) / rel).string();
}

std::pair<corpus::Corpus, corpus::Corpus> split_foreign_pools(const Corpus& foreign,
                                                              const BenchmarkManifest& m) {
    SeededRng root(m.seed);
    auto f_idx = root.derive("foreign-split").sample_indices(foreign.size(), foreign.size());
    const std::size_t f_train_n = foreign.size() * static_cast<std::size_t>(m.id_train) /
                                  static_cast<std::size_t>(m.id_train + m.id_test);
    Corpus foreign_train, foreign_test;
    for (std::size_t i = 0; i < f_idx.size(); ++i)
        (i < f_train_n ? foreign_train : foreign_test).push_back(foreign[f_idx[i]]);
    return {std::move(foreign_train), std::move(foreign_test)};
}

namespace {

// Scenario rows plus the ids of the pool records they were derived from.
// Corruption REPLACES its source records: the pristine version of a corrupted
// record must not coexist with it in a split, or the labels contradict each
// other on identical text. Out-domain rows consume nothing.
struct ScenarioRows {
    Corpus rows;
    std::set<std::string> consumed;
};

ScenarioRows corrupt_from(Scenario s, const Corpus& id_pool, const Corpus& foreign_pool, int n,
                          SeededRng rng) {
    ScenarioRows out;
    switch (s) {
        case Scenario::out_domain:
            out.rows = gen_out_domain(id_pool, foreign_pool, n, rng);
            return out;
        case Scenario::misaligned:
            out.rows = gen_misaligned(id_pool, n, rng);
            for (const auto& p : out.rows) out.consumed.insert(p.meta.at("comment_from"));
            return out;
        case Scenario::shuffled_comment:
            out.rows = gen_shuffled_comment(id_pool, n, kDefaultShuffleRatio, rng);
            break;
        case Scenario::buggy_code:
            out.rows = gen_buggy_code(id_pool, n, rng);
            break;
        case Scenario::id:
            throw Error("BadScenario", "id is not a generated scenario");
    }
    for (const auto& p : out.rows) out.consumed.insert(p.meta.at("source_id"));
    return out;
}

Corpus without_ids(const Corpus& pool, const std::set<std::string>& drop) {
    Corpus out;
    for (const auto& p : pool)
        if (!drop.count(p.id)) out.push_back(p);
    return out;
}

} // namespace

BenchmarkManifest assemble_benchmark(const Corpus& id_corpus, const Corpus& foreign_corpus,
                                     BenchmarkManifest draft, const std::string& out_dir,
                                     const std::string& id_corpus_path,
                                     const std::string& foreign_corpus_path) {
    const std::vector<Scenario> kOodScenarios = {Scenario::out_domain, Scenario::misaligned,
                                                 Scenario::shuffled_comment,
                                                 Scenario::buggy_code};
    BenchmarkManifest m = draft;
    m.generator_version = kGeneratorVersion;
    m.id_corpus_path = id_corpus_path;
    m.foreign_corpus_path = foreign_corpus_path;
    if (m.id_train <= 0 || m.id_test <= 0)
        throw InsufficientCorpus("id_train and id_test must be positive");
    if (static_cast<std::size_t>(m.id_train + m.id_test) > id_corpus.size())
        throw InsufficientCorpus("corpus has " + std::to_string(id_corpus.size()) +
                                 " rows, need " + std::to_string(m.id_train + m.id_test));
    if (!(m.train_ood_frac >= 0.0 && m.train_ood_frac < 0.25) ||
        !(m.test_ood_ratio > 0.0 && m.test_ood_ratio < 1.0))
        throw InsufficientCorpus("invalid OOD ratios");

    SeededRng root(m.seed);

    // disjoint train/test ID pools
    auto split_idx = root.derive("id-split").sample_indices(id_corpus.size(), id_corpus.size());
    Corpus train_pool, test_pool;
    for (std::size_t i = 0; i < split_idx.size(); ++i) {
        if (static_cast<int>(i) < m.id_train) train_pool.push_back(id_corpus[split_idx[i]]);
        else if (static_cast<int>(i) < m.id_train + m.id_test)
            test_pool.push_back(id_corpus[split_idx[i]]);
    }

    auto [foreign_train, foreign_test] = split_foreign_pools(foreign_corpus, m);

    fs::create_directories(out_dir);

    // TRAIN for COOD: the full ID train pool
    m.train_cood_path = "train_cood.jsonl";
    m.train_cood_rows = static_cast<int>(train_pool.size());
    corpus::save_jsonl(train_pool, manifest_file_path(out_dir, m.train_cood_path));

    // TRAIN for COOD+: per scenario, train_ood_frac of the pool is replaced by
    // rows corrupted FROM the replaced records (out-domain drops victims and
    // substitutes foreign pairs)
    const int per_scenario =
        static_cast<int>(std::lround(m.train_ood_frac * static_cast<double>(m.id_train)));
    const int replaced = per_scenario * static_cast<int>(kOodScenarios.size());
    if (replaced >= m.id_train) throw InsufficientCorpus("replacement exceeds the train pool");
    Corpus remaining = train_pool;
    Corpus ood_rows;
    for (std::size_t s = 0; s < kOodScenarios.size(); ++s) {
        auto cr = corrupt_from(kOodScenarios[s], remaining, foreign_train, per_scenario,
                               root.derive("train-ood").derive(s));
        if (kOodScenarios[s] == Scenario::out_domain) {
            auto victims = root.derive("train-od-victims")
                               .sample_indices(remaining.size(),
                                               static_cast<std::size_t>(per_scenario));
            for (auto v : victims) cr.consumed.insert(remaining[v].id);
        }
        remaining = without_ids(remaining, cr.consumed);
        ood_rows.insert(ood_rows.end(), cr.rows.begin(), cr.rows.end());
    }
    Corpus mixed = remaining;
    mixed.insert(mixed.end(), ood_rows.begin(), ood_rows.end());
    root.derive("train-mix").shuffle(mixed);
    m.train_cood_plus_path = "train_cood_plus.jsonl";
    m.train_cood_plus_rows = static_cast<int>(mixed.size());
    corpus::save_jsonl(mixed, manifest_file_path(out_dir, m.train_cood_plus_path));

    // full ID test pool, used by search-eval
    m.test_id_path = "test_id.jsonl";
    corpus::save_jsonl(test_pool, manifest_file_path(out_dir, m.test_id_path));

    // per-scenario, per-seed test files: (1 - ratio) ID + ratio OOD
    const int n_ood = static_cast<int>(std::lround(m.test_ood_ratio *
                                                   static_cast<double>(m.id_test)));
    const int n_id = m.id_test - n_ood;
    m.test_rows_per_file = m.id_test;
    m.test_scenarios.clear();
    m.test_paths.assign(kOodScenarios.size(), {});
    for (std::size_t s = 0; s < kOodScenarios.size(); ++s) {
        const char* sname = corpus::scenario_name(kOodScenarios[s]);
        m.test_scenarios.push_back(sname);
        for (int seed_i = 0; seed_i < m.n_test_seeds; ++seed_i) {
            auto sub = root.derive("test").derive(s).derive(static_cast<std::uint64_t>(seed_i));
            auto cr = corrupt_from(kOodScenarios[s], test_pool, foreign_test, n_ood,
                                   sub.derive("ood-part"));
            Corpus avail = without_ids(test_pool, cr.consumed);
            auto id_rows_idx = sub.derive("id-part")
                                   .sample_indices(avail.size(), static_cast<std::size_t>(n_id));
            Corpus file_rows;
            for (auto i : id_rows_idx) file_rows.push_back(avail[i]);
            file_rows.insert(file_rows.end(), cr.rows.begin(), cr.rows.end());
            sub.derive("mix").shuffle(file_rows);
            std::string rel = std::string("test_") + sname + "_s" + std::to_string(seed_i) +
                              ".jsonl";
            corpus::save_jsonl(file_rows, manifest_file_path(out_dir, rel));
            m.test_paths[s].push_back(rel);
        }
    }

    std::ofstream mf(manifest_file_path(out_dir, "manifest.json"), std::ios::binary);
    if (!mf) throw Error("IoError", "cannot write manifest.json");
    mf << manifest_to_json(m) << "\n";
    return m;
}

namespace {

int count_rows(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return -1;
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    return rows;
}

} // namespace

BenchmarkManifest load_manifest(const std::string& dir) {
    const std::string mpath = manifest_file_path(dir, "manifest.json");
    std::ifstream in(mpath, std::ios::binary);
    if (!in) throw ManifestMissing(mpath);
    std::stringstream ss;
    ss << in.rdbuf();
    BenchmarkManifest m = manifest_from_json(ss.str());

    auto check = [&](const std::string& rel, int want) {
        const int got = count_rows(manifest_file_path(dir, rel));
        if (got < 0) throw ManifestMissing(rel + " referenced but absent");
        if (want >= 0 && got != want)
            throw Error("ManifestRowMismatch",
                        rel + " has " + std::to_string(got) + " rows, manifest says " +
                            std::to_string(want));
    };
    check(m.train_cood_path, m.train_cood_rows);
    check(m.train_cood_plus_path, m.train_cood_plus_rows);
    check(m.test_id_path, m.id_test);
    for (const auto& per_scenario : m.test_paths)
        for (const auto& rel : per_scenario) check(rel, m.test_rows_per_file);
    return m;
}

} // namespace cood::scenarios
