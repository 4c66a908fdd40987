#pragma once

// Bimodal (comment, code) corpus handling: tokenization, vocabularies,
// fixed-length encoding, JSONL persistence, length-matched sampling, and the
// synthetic two-domain corpus generator used for desk-scale experiments.

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "coodkit/common.hpp"
#include "coodkit/rng.hpp"

namespace cood::corpus {

COOD_DEFINE_ERROR(EmptyText);
COOD_DEFINE_ERROR(EmptyCorpus);
COOD_DEFINE_ERROR(MissingField);
COOD_DEFINE_ERROR(InsufficientSource);

struct ParseError : Error {
    int line;
    ParseError(int line_no, const std::string& msg)
        : Error("ParseError", "line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

enum class Scenario { id, out_domain, misaligned, shuffled_comment, buggy_code };

const char* scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

// One (comment, code) record. label 1 = inlier, 0 = outlier; scenario == id
// if and only if label == 1.
struct BimodalPair {
    std::string id;
    std::string comment;
    std::string code;
    Scenario scenario = Scenario::id;
    int label = 1;
    std::map<std::string, std::string> meta;

    bool operator==(const BimodalPair&) const = default;
};

using Corpus = std::vector<BimodalPair>;

// ---- tokenization ----

// lowercase, whitespace split, punctuation chars split off as 1-char tokens
std::vector<std::string> tokenize_comment(const std::string& text);

// minicode lexing when the text lexes cleanly, otherwise a generic split on
// whitespace and symbol boundaries; case preserved
std::vector<std::string> tokenize_code(const std::string& text);

// ~50 English function words; punctuation tokens are treated as stopwords by
// is_stopword as well
const std::vector<std::string>& stopword_list();
bool is_stopword(const std::string& token);
bool is_punct_token(const std::string& token);

// ---- vocabulary ----

struct Vocabulary {
    std::vector<std::string> tokens;  // index 0 = PAD, 1 = UNK
    std::unordered_map<std::string, int> index;
    int min_freq = 1;
    int max_size = 0;

    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static const char* pad_token() { return "<pad>"; }
    static const char* unk_token() { return "<unk>"; }

    int size() const { return static_cast<int>(tokens.size()); }
    int lookup(const std::string& tok) const {
        auto it = index.find(tok);
        return it == index.end() ? kUnk : it->second;
    }
};

// tokens with frequency >= min_freq, most frequent first (ties lexicographic),
// truncated to max_size - 2, preceded by PAD and UNK
Vocabulary build_vocab(const Corpus& corpus, int min_freq, int max_size);

std::string vocab_to_json(const Vocabulary& v);
Vocabulary vocab_from_json(const std::string& json_text);
void save_vocab(const Vocabulary& v, const std::string& path);
Vocabulary load_vocab(const std::string& path);

// ---- encoding ----

struct EncodedPair {
    std::vector<int> comment_ids;  // length max_len_comment, PAD-filled
    std::vector<int> code_ids;     // length max_len_code, PAD-filled
    int comment_len = 0;
    int code_len = 0;
};

constexpr int kDefaultMaxCommentLen = 32;
constexpr int kDefaultMaxCodeLen = 64;

EncodedPair encode_pair(const BimodalPair& pair, const Vocabulary& vocab,
                        int max_len_comment = kDefaultMaxCommentLen,
                        int max_len_code = kDefaultMaxCodeLen);

// ---- persistence ----

Corpus load_jsonl(const std::string& path);
void save_jsonl(const Corpus& corpus, const std::string& path);

// ---- sampling ----

// Samples n pairs from `source` so the comment-token-length histogram
// (bins of bin_width) matches the reference histogram proportions. Bins the
// source cannot fill are topped up from the nearest non-empty bins.
Corpus length_matched_sample(const Corpus& reference, const Corpus& source, int n,
                             int bin_width, SeededRng rng);

int comment_token_length(const BimodalPair& pair);

// ---- synthetic corpus ----

struct SynthSpec {
    int n_pairs = 2500;
    std::uint64_t seed = 1;
};

// Domain A: declarative docstring-style comments over templated minicode.
// Domain B: question-style comments with a disjoint content vocabulary.
// Content-word overlap between the two is limited to stopwords/punctuation.
Corpus generate_synthetic_corpus(const SynthSpec& spec, SeededRng rng);
Corpus generate_synthetic_foreign_corpus(const SynthSpec& spec, SeededRng rng);

} // namespace cood::corpus
