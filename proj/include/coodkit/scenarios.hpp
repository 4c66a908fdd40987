#pragma once

// Deterministic generators for the four OOD scenarios and the benchmark
// assembler that mixes ID and OOD data at fixed ratios. Every generator is a
// pure function of (inputs, seed); per-record substreams are derived from the
// record id so generation is order-independent.

#include <cstdint>
#include <string>
#include <vector>

#include "coodkit/common.hpp"
#include "coodkit/corpus.hpp"
#include "coodkit/rng.hpp"

namespace cood::scenarios {

COOD_DEFINE_ERROR(TooFewPairs);
COOD_DEFINE_ERROR(InsufficientEligible);
COOD_DEFINE_ERROR(NoMutableRecords);
COOD_DEFINE_ERROR(InsufficientCorpus);
COOD_DEFINE_ERROR(ManifestMissing);

inline constexpr double kDefaultShuffleRatio = 0.20;
inline constexpr double kDefaultTrainOodFrac = 0.01;   // per scenario
inline constexpr double kDefaultTestOodRatio = 0.20;
inline constexpr int kDefaultTestSeeds = 5;
inline constexpr int kLengthBinWidth = 8;
inline constexpr const char* kGeneratorVersion = "coodkit-bench-1";

// Scenario 1: foreign pairs sampled to match the ID comment-length histogram.
corpus::Corpus gen_out_domain(const corpus::Corpus& id_corpus,
                              const corpus::Corpus& foreign_corpus, int n, SeededRng rng);

// Scenario 2: a seeded derangement of the code column over n sampled pairs;
// no output pair keeps a code equal to its original.
corpus::Corpus gen_misaligned(const corpus::Corpus& corpus, int n, SeededRng rng);

// Scenario 3: per comment, k = max(2, round(ratio * |eligible|)) non-stopword
// non-punctuation positions are cyclically rotated; stopword and punctuation
// positions stay fixed; the code is unchanged.
corpus::Corpus gen_shuffled_comment(const corpus::Corpus& corpus, int n, double ratio,
                                    SeededRng rng);

// Scenario 4: variable misuse; one identifier use is spliced to a different
// in-scope name, uniformly over legal (use, replacement) pairs.
corpus::Corpus gen_buggy_code(const corpus::Corpus& corpus, int n, SeededRng rng);

// enumerated legal (use index, replacement) pairs for one record's code
std::vector<std::pair<int, std::string>> mutation_candidates(const std::string& code);

struct BenchmarkManifest {
    std::uint64_t seed = 0;
    int id_train = 0;
    int id_test = 0;
    double train_ood_frac = kDefaultTrainOodFrac;  // per scenario
    double test_ood_ratio = kDefaultTestOodRatio;
    int n_test_seeds = kDefaultTestSeeds;
    std::string generator_version = kGeneratorVersion;

    // row counts actually emitted
    int train_cood_rows = 0;
    int train_cood_plus_rows = 0;
    int test_rows_per_file = 0;

    // emitted files, relative to the manifest directory
    std::string train_cood_path;
    std::string train_cood_plus_path;
    std::string test_id_path;
    // test_paths[scenario][seed]
    std::vector<std::vector<std::string>> test_paths;
    std::vector<std::string> test_scenarios;

    // source corpora, recorded so search-eval can regenerate corruption
    std::string id_corpus_path;
    std::string foreign_corpus_path;
};

std::string manifest_to_json(const BenchmarkManifest& m);
BenchmarkManifest manifest_from_json(const std::string& text);

// Writes all splits plus manifest.json under out_dir and returns the
// manifest. Train = 96% ID + 1% per scenario (replacement); each per-scenario
// test file = 80% ID / 20% OOD, resampled for n_test_seeds seeds.
BenchmarkManifest assemble_benchmark(const corpus::Corpus& id_corpus,
                                     const corpus::Corpus& foreign_corpus,
                                     BenchmarkManifest draft, const std::string& out_dir,
                                     const std::string& id_corpus_path = "",
                                     const std::string& foreign_corpus_path = "");

// Loads manifest.json from dir and verifies every referenced file exists with
// the recorded row count.
BenchmarkManifest load_manifest(const std::string& dir);

// The benchmark's deterministic train/test split of the foreign corpus,
// proportional to the ID split. Used by the assembler and by search-eval when
// it regenerates corruption.
std::pair<corpus::Corpus, corpus::Corpus> split_foreign_pools(const corpus::Corpus& foreign,
                                                              const BenchmarkManifest& m);

std::string manifest_file_path(const std::string& dir, const std::string& rel);

} // namespace cood::scenarios
