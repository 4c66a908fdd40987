#include "coodkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coodkit/minicode.hpp"

namespace cood::corpus {

using nlohmann::json;

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::id: return "id";
        case Scenario::out_domain: return "out_domain";
        case Scenario::misaligned: return "misaligned";
        case Scenario::shuffled_comment: return "shuffled_comment";
        case Scenario::buggy_code: return "buggy_code";
    }
    return "id";
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "id") return Scenario::id;
    if (name == "out_domain") return Scenario::out_domain;
    if (name == "misaligned") return Scenario::misaligned;
    if (name == "shuffled_comment") return Scenario::shuffled_comment;
    if (name == "buggy_code") return Scenario::buggy_code;
    throw Error("UnknownScenario", name);
}

// ---- tokenization ----

namespace {

bool ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

} // namespace

std::vector<std::string> tokenize_comment(const std::string& text) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    };
    for (char raw : text) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (ascii_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            word += c;
        }
    }
    flush();
    if (out.empty()) throw EmptyText("comment has no tokens");
    return out;
}

std::vector<std::string> tokenize_code(const std::string& text) {
    std::vector<std::string> out;
    try {
        for (const auto& tok : minicode::lex(text)) out.push_back(tok.text);
    } catch (const minicode::UnterminatedString&) {
        // generic fallback: word characters stick together, everything else
        // is a single-char token
        std::string word;
        auto flush = [&] {
            if (!word.empty()) {
                out.push_back(word);
                word.clear();
            }
        };
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                flush();
            } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                word += c;
            } else {
                flush();
                out.emplace_back(1, c);
            }
        }
        flush();
    }
    if (out.empty()) throw EmptyText("code has no tokens");
    return out;
}

const std::vector<std::string>& stopword_list() {
    static const std::vector<std::string> words = {
        "a",     "about",  "across", "against", "all", "an",    "and",   "any",   "are",
        "as",    "at",     "be",     "been",  "being", "best",  "between", "both",
        "but",   "by",     "can",    "could", "did",   "do",    "does",  "each",
        "else",  "for",    "from",   "had",   "has",   "have",  "how",   "i",
        "if",    "in",     "into",   "is",    "it",    "its",   "may",   "must",
        "my",    "no",     "not",    "of",    "on",    "one",   "or",    "over",
        "per",   "should", "so",     "than",  "that",  "the",   "then",  "these",
        "this",  "those",  "to",     "too",   "under", "using", "was",   "way",
        "were",  "what",   "when",   "where", "which", "who",   "why",   "will",
        "with",  "would"};
    return words;
}

bool is_punct_token(const std::string& token) {
    return token.size() == 1 && ascii_punct(token[0]);
}

bool is_stopword(const std::string& token) {
    if (is_punct_token(token)) return true;
    const auto& sw = stopword_list();
    return std::binary_search(sw.begin(), sw.end(), token);
}

// ---- vocabulary ----

Vocabulary build_vocab(const Corpus& corpus, int min_freq, int max_size) {
    if (corpus.empty()) throw EmptyCorpus("build_vocab over an empty corpus");
    std::map<std::string, long> freq;
    for (const auto& pair : corpus) {
        for (const auto& t : tokenize_comment(pair.comment)) ++freq[t];
        for (const auto& t : tokenize_code(pair.code)) ++freq[t];
    }
    std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });

    Vocabulary v;
    v.min_freq = min_freq;
    v.max_size = max_size;
    v.tokens = {Vocabulary::pad_token(), Vocabulary::unk_token()};
    for (const auto& [tok, count] : ranked) {
        if (count < min_freq) continue;
        if (static_cast<int>(v.tokens.size()) >= max_size) break;
        v.tokens.push_back(tok);
    }
    for (std::size_t i = 0; i < v.tokens.size(); ++i)
        v.index[v.tokens[i]] = static_cast<int>(i);
    return v;
}

std::string vocab_to_json(const Vocabulary& v) {
    json j;
    j["tokens"] = v.tokens;
    j["min_freq"] = v.min_freq;
    j["max_size"] = v.max_size;
    return j.dump();
}

Vocabulary vocab_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    Vocabulary v;
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.min_freq = j.at("min_freq").get<int>();
    v.max_size = j.at("max_size").get<int>();
    for (std::size_t i = 0; i < v.tokens.size(); ++i)
        v.index[v.tokens[i]] = static_cast<int>(i);
    return v;
}

void save_vocab(const Vocabulary& v, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << vocab_to_json(v) << "\n";
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return vocab_from_json(ss.str());
}

// ---- encoding ----

namespace {

std::vector<int> encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                               int max_len, int& true_len) {
    std::vector<int> ids(static_cast<std::size_t>(max_len), Vocabulary::kPad);
    true_len = std::min<int>(static_cast<int>(tokens.size()), max_len);
    for (int i = 0; i < true_len; ++i) ids[static_cast<std::size_t>(i)] = vocab.lookup(tokens[i]);
    return ids;
}

} // namespace

EncodedPair encode_pair(const BimodalPair& pair, const Vocabulary& vocab, int max_len_comment,
                        int max_len_code) {
    if (max_len_comment < 1 || max_len_code < 1)
        throw Error("BadMaxLen", "max_len must be >= 1");
    EncodedPair e;
    e.comment_ids = encode_tokens(tokenize_comment(pair.comment), vocab, max_len_comment,
                                  e.comment_len);
    e.code_ids = encode_tokens(tokenize_code(pair.code), vocab, max_len_code, e.code_len);
    return e;
}

// ---- persistence ----

Corpus load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    Corpus corpus;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        for (const char* field : {"id", "comment", "code", "scenario", "label", "meta"})
            if (!j.contains(field))
                throw MissingField(std::string(field) + " at line " + std::to_string(line_no));
        BimodalPair p;
        try {
            p.id = j.at("id").get<std::string>();
            p.comment = j.at("comment").get<std::string>();
            p.code = j.at("code").get<std::string>();
            p.scenario = scenario_from_name(j.at("scenario").get<std::string>());
            p.label = j.at("label").get<int>();
            p.meta = j.at("meta").get<std::map<std::string, std::string>>();
        } catch (const json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        corpus.push_back(std::move(p));
    }
    return corpus;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    for (const auto& p : corpus) {
        json j;
        j["id"] = p.id;
        j["comment"] = p.comment;
        j["code"] = p.code;
        j["scenario"] = scenario_name(p.scenario);
        j["label"] = p.label;
        j["meta"] = p.meta;
        out << j.dump() << "\n";
    }
}

// ---- length-matched sampling ----

int comment_token_length(const BimodalPair& pair) {
    return static_cast<int>(tokenize_comment(pair.comment).size());
}

Corpus length_matched_sample(const Corpus& reference, const Corpus& source, int n, int bin_width,
                             SeededRng rng) {
    if (bin_width < 1) throw Error("BadBinWidth", "bin_width must be >= 1");
    if (n < 0) throw Error("BadCount", "n must be >= 0");
    if (n == 0) return {};
    if (static_cast<std::size_t>(n) > source.size())
        throw InsufficientSource("requested " + std::to_string(n) + " of " +
                                 std::to_string(source.size()));
    if (reference.empty()) throw EmptyCorpus("empty reference corpus");

    std::map<int, long> ref_hist;
    for (const auto& p : reference) ++ref_hist[comment_token_length(p) / bin_width];
    const double ref_total = static_cast<double>(reference.size());

    std::map<int, std::vector<std::size_t>> pools;
    for (std::size_t i = 0; i < source.size(); ++i)
        pools[comment_token_length(source[i]) / bin_width].push_back(i);

    // per-bin targets: floor of the proportional share, remainder assigned by
    // largest fractional part (ties to the lower bin)
    std::vector<std::pair<int, double>> shares;
    long assigned = 0;
    std::map<int, long> target;
    for (const auto& [bin, count] : ref_hist) {
        const double want = n * (static_cast<double>(count) / ref_total);
        target[bin] = static_cast<long>(want);
        assigned += target[bin];
        shares.emplace_back(bin, want - static_cast<double>(target[bin]));
    }
    std::sort(shares.begin(), shares.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++target[shares[i % shares.size()].first];

    // draw per bin; remember shuffled leftovers for deficit fallback
    Corpus out;
    std::map<int, std::vector<std::size_t>> leftover;
    std::map<int, long> missing;
    for (auto& [bin, want] : target) {
        auto pool = pools.count(bin) ? pools[bin] : std::vector<std::size_t>{};
        auto sub = rng.derive(static_cast<std::uint64_t>(bin));
        sub.shuffle(pool);
        const long take = std::min<long>(want, static_cast<long>(pool.size()));
        for (long i = 0; i < take; ++i) out.push_back(source[pool[static_cast<std::size_t>(i)]]);
        leftover[bin].assign(pool.begin() + take, pool.end());
        if (want > take) missing[bin] = want - take;
    }
    for (auto& [bin, pool] : pools) {
        if (target.count(bin)) continue;
        auto shuffled = pool;
        auto sub = rng.derive(static_cast<std::uint64_t>(bin));
        sub.shuffle(shuffled);
        leftover[bin] = shuffled;
    }

    // top up deficits from the nearest bins, lower side first
    for (auto& [bin, miss] : missing) {
        for (int dist = 1; miss > 0 && dist < 4096; ++dist) {
            for (int cand : {bin - dist, bin + dist}) {
                auto it = leftover.find(cand);
                while (miss > 0 && it != leftover.end() && !it->second.empty()) {
                    out.push_back(source[it->second.front()]);
                    it->second.erase(it->second.begin());
                    --miss;
                }
            }
        }
        if (miss > 0)
            throw InsufficientSource("no fallback pairs near bin " + std::to_string(bin));
    }
    return out;
}

// ---- synthetic corpus ----

namespace {

struct DomainPools {
    std::vector<std::string> verbs, fstems, pstems, rstems;
};

const DomainPools& domain_a() {
    static const DomainPools pools = {
        // verbs
        {"returns", "computes", "calculates", "derives", "estimates", "measures", "updates",
         "blends", "scales", "folds"},
        // function-name stems
        {"sum",      "total",    "mean",      "median",   "average",  "variance", "deviation",
         "spread",   "midpoint", "norm",      "magnitude","ratio",    "fraction", "quotient",
         "product",  "difference","delta",    "gap",      "margin",   "offset",   "bias",
         "drift",    "slope",    "curvature", "area",     "perimeter","volume",   "density",
         "torque",   "momentum", "energy",    "flux",     "gain",     "yield",    "growth",
         "decay",    "tempo",    "velocity",  "distance", "span",     "extent",   "depth",
         "height",   "width",    "girth",     "radius",   "diameter", "chord",    "angle",
         "bearing",  "heading",  "pitch",     "skew",     "entropy",  "purity",   "sharpness",
         "contrast", "brightness","luma",     "chroma",   "hue",      "tint",     "shade",
         "blur"},
        // parameter stems
        {"count",    "rate",     "limit",    "bound",    "floor",    "ceiling",  "quota",
         "budget",   "stock",    "supply",   "demand",   "price",    "cost",     "fee",
         "tax",      "wage",     "salary",   "bonus",    "score",    "grade",    "rank",
         "level",    "stage",    "phase",    "round",    "turn",     "tick",     "pulse",
         "beat",     "cycle",    "lap",      "stride",   "gait",     "pace",     "tempo2",
         "speed",    "thrust",   "lift",     "drag",     "mass",     "weight",   "charge",
         "voltage",  "current",  "ohm",      "watt",     "lumen",    "candela",  "kelvin",
         "mole",     "gram",     "meter",    "liter",    "second",   "minute",   "hour",
         "radian",   "degree",   "azimuth",  "altitude", "latitude", "longitude","easting",
         "northing", "slice2",   "seed2",    "alpha",    "beta",     "gamma",    "lambda",
         "sigma",    "theta",    "kappa",    "omega",    "epsilon",  "zeta",     "eta",
         "iota",     "mu",       "nu",       "xi",       "rho",      "tau",      "phi",
         "chi",      "psi",      "upsilon",  "omicron",  "digamma",  "stigma",   "sampi",
         "koppa",    "heta",     "sho",      "san",      "qoppa"},
        // result stems
        {"result",   "outcome",  "output",   "answer",   "verdict",  "summary",  "digest",
         "residue",  "remainder","balance",  "surplus",  "deficit",  "net",      "gross",
         "subtotal", "rollup",   "tally",    "ledger",   "record2",  "footing",  "carry",
         "holdout",  "buffer",   "cache",    "store",    "basket",   "bundle",   "batch2",
         "parcel",   "payload",  "cargo",    "freight",  "haul",     "loadout",  "stash",
         "trove",    "hoard",    "reserve",  "backlog",  "queue2",   "pool2",    "bank",
         "vault",    "bin2",     "crate",    "keg",      "cask",     "drum"}};
    return pools;
}

const DomainPools& domain_b() {
    static const DomainPools pools = {
        // verbs
        {"get", "make", "build", "fetch", "convert", "parse", "merge", "split", "load", "send"},
        // function-name stems
        {"string",   "array",    "number",  "file",     "json",    "url",      "query",
         "request",  "response", "html",    "page",     "session", "cookie",   "token2",
         "header",   "body",     "form",    "field",    "table",   "column2",  "row2",
         "index2",   "schema",   "model",   "view",     "route",   "endpoint", "socket",
         "stream",   "thread",   "process", "worker",   "job",     "task",     "event",
         "handler",  "callback", "promise", "future",   "buffer2", "packet",   "frame2",
         "message",  "channel",  "topic",   "queue3",   "broker",  "client"},
        // parameter stems
        {"user",     "password", "email",    "username", "account", "profile",  "avatar",
         "login",    "logout",   "signup",   "admin",    "guest",   "member",   "role",
         "permission","group2",  "team",     "project",  "repo",    "branch",   "commit",
         "tag2",     "release",  "version",  "patch",    "bugfix",  "feature",  "config",
         "setting",  "option",   "flag",     "switch",   "toggle",  "env",      "path2",
         "folder",   "directory","filename", "extension","mimetype","encoding", "charset",
         "locale",   "timezone", "timestamp","date",     "month",   "year",     "week",
         "weekday",  "calendar", "clock",    "alarm",    "timer",   "interval", "timeout",
         "retry",    "backoff",  "jitter",   "nonce",    "salt",    "hashx",    "digest2",
         "checksum"},
        // result stems
        {"reply",    "status",   "error2",   "warning",  "notice",  "alert",    "toast",
         "banner",   "modal",    "dialog",   "popup",    "tooltip", "badge",    "icon",
         "thumbnail","preview",  "snapshot", "draft",    "template2","layout",  "theme",
         "style",    "skin",     "palette",  "font",     "glyph",   "sprite",   "texture",
         "mesh2",    "shader",   "canvas",   "viewport", "cursor",  "pointer",  "caret"}};
    return pools;
}

std::string pick(SeededRng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
}

// k distinct entries from a pool
std::vector<std::string> pick_distinct(SeededRng& rng, const std::vector<std::string>& pool,
                                       std::size_t k) {
    auto idx = rng.sample_indices(pool.size(), k);
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(pool[i]);
    return out;
}

const std::vector<std::string> kOps = {"+", "-", "*", "/"};

// Stems drawn for one domain-A record family. Comments mention stems in the
// order the code consumes them, and the corpus emits all six slot
// permutations of each family's three parameter stems (consecutive indices,
// both comment and code permuted together). Order-blind encodings cannot
// separate family siblings when two land in one training batch, which makes
// token order part of the alignment task itself.
struct ARecipe {
    int tmpl;
    std::string verb, f, p0, p1, p2, r, s, op, op2;
};

// hot-headed stem choice: half the draws come from a small head of the pool,
// giving natural Zipf-like reuse (and in-batch stem collisions) without
// shrinking the vocabulary
std::string pick_hot(SeededRng& rng, const std::vector<std::string>& pool, std::size_t head) {
    // two of three draws come from the hot head
    if (rng.next_below(3) != 0)
        return pool[static_cast<std::size_t>(rng.next_below(std::min(head, pool.size())))];
    return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
}

std::vector<std::string> pick_hot_distinct(SeededRng& rng, const std::vector<std::string>& pool,
                                           std::size_t head, std::size_t k) {
    std::vector<std::string> out;
    while (out.size() < k) {
        auto cand = pick_hot(rng, pool, head);
        if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(cand);
    }
    return out;
}

ARecipe draw_a_recipe(SeededRng& rng) {
    const auto& d = domain_a();
    ARecipe rec;
    rec.tmpl = static_cast<int>(rng.next_below(4));
    rec.verb = pick(rng, d.verbs);
    rec.f = pick_hot(rng, d.fstems, 8);
    const auto p = pick_hot_distinct(rng, d.pstems, 10, 3);
    rec.p0 = p[0];
    rec.p1 = p[1];
    rec.p2 = p[2];
    const auto r = pick_distinct(rng, d.rstems, 2);
    rec.r = r[0];
    rec.s = r[1];
    rec.op = kOps[rng.next_below(4)];
    rec.op2 = kOps[rng.next_below(4)];
    return rec;
}

// perm in [0, 6): which assignment of the family's three stems to the
// template's slots this record uses
BimodalPair render_a_recipe(const ARecipe& rec, std::size_t index, int perm) {
    static const int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    const std::string stems[3] = {rec.p0, rec.p1, rec.p2};
    const std::string a = stems[kPerm[perm][0]];
    const std::string b = stems[kPerm[perm][1]];
    const std::string c = stems[kPerm[perm][2]];
    const auto& t = rec;

    std::string code, comment;
    switch (t.tmpl) {
        case 0:
            code = "fn " + t.f + "(" + a + ", " + b + ", " + c + ") { let " + t.r + " = " + a +
                   " " + t.op + " " + b + "; let " + t.s + " = " + t.r + " " + t.op2 + " " + c +
                   "; return " + t.s + "; }";
            comment = t.verb + " the " + t.f + " " + t.s + " from " + a + ", " + b + " and " +
                      c + ".";
            break;
        case 1:
            code = "fn " + t.f + "(" + a + ", " + b + ", " + c + ") { if (" + a + " < " + b +
                   ") { return " + c + "; } return " + a + "; }";
            comment = t.verb + " the " + t.f + " of " + c + " when " + a + " under " + b + ".";
            break;
        case 2:
            code = "fn " + t.f + "(" + a + ", " + b + ", " + c + ") { let " + t.r + " = " + a +
                   "; while (" + t.r + " < " + b + ") { " + t.r + " = " + t.r + " " + t.op +
                   " " + c + "; } return " + t.r + "; }";
            comment = t.verb + " the " + t.f + " " + t.r + " across " + a + " to " + b + " by " +
                      c + ".";
            break;
        default:
            code = "fn " + t.f + "(" + a + ", " + b + ", " + c + ") { let " + t.r + " = " + a +
                   " " + t.op + " " + b + "; if (" + t.r + " < " + c + ") { return " + t.r +
                   "; } return " + c + "; }";
            comment = t.verb + " the " + t.f + " " + t.r + " of " + a + " and " + b +
                      " against " + c + ".";
            break;
    }

    BimodalPair pair;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "a%06zu", index);
    pair.id = idbuf;
    pair.comment = comment;
    pair.code = code;
    pair.scenario = Scenario::id;
    pair.label = 1;
    pair.meta["domain"] = "a";
    pair.meta["template"] = std::to_string(t.tmpl);
    pair.meta["perm"] = std::to_string(perm);
    return pair;
}

BimodalPair make_domain_b_pair(std::size_t index, SeededRng rng) {
    const auto& d = domain_b();
    const int tmpl = static_cast<int>(rng.next_below(4));
    const std::string verb = pick(rng, d.verbs);
    const std::string f = pick(rng, d.fstems);
    const auto p = pick_distinct(rng, d.pstems, 3);
    const auto r = pick_distinct(rng, d.rstems, 2);
    const std::string op = kOps[rng.next_below(4)];
    const std::string op2 = kOps[rng.next_below(4)];

    std::string code, comment;
    switch (tmpl) {
        case 0:
            code = "fn " + f + "(" + p[0] + ", " + p[1] + ") { let " + r[0] + " = " + p[0] + " " +
                   op + " " + p[1] + "; return " + r[0] + "; }";
            comment = "how do i " + verb + " the " + f + " " + r[0] + " with " + p[0] + " and " +
                      p[1] + "?";
            break;
        case 1:
            code = "fn " + f + "(" + p[0] + ") { let " + r[0] + " = " + p[0] + " * " + p[0] +
                   "; return " + r[0] + "; }";
            comment = "what is the best way to " + verb + " a " + f + " from one " + p[0] + "?";
            break;
        case 2:
            code = "fn " + f + "(" + p[0] + ", " + p[1] + ", " + p[2] + ") { let " + r[0] + " = " +
                   p[0] + " " + op + " " + p[1] + "; let " + r[1] + " = " + r[0] + " " + op2 +
                   " " + p[2] + "; return " + r[1] + "; }";
            comment = "how can i " + verb + " the " + f + " " + r[1] + " using " + p[0] + ", " +
                      p[1] + " and " + p[2] + "?";
            break;
        default:
            code = "fn " + f + "(" + p[0] + ", " + p[1] + ") { if (" + p[0] + " < " + p[1] +
                   ") { return " + p[0] + "; } return " + p[1] + "; }";
            comment = "why does my " + f + " " + verb + " the " + r[0] + " with " + p[0] +
                      " and " + p[1] + "?";
            break;
    }

    BimodalPair pair;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "b%06zu", index);
    pair.id = idbuf;
    pair.comment = comment;
    pair.code = code;
    pair.scenario = Scenario::id;
    pair.label = 1;
    pair.meta["domain"] = "b";
    pair.meta["template"] = std::to_string(tmpl);
    return pair;
}

} // namespace

Corpus generate_synthetic_corpus(const SynthSpec& spec, SeededRng rng) {
    // six consecutive indices form a family: one recipe, all six parameter
    // permutations
    Corpus corpus;
    corpus.reserve(static_cast<std::size_t>(spec.n_pairs));
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_pairs); ++i) {
        auto sub = rng.derive(i / 6);
        corpus.push_back(render_a_recipe(draw_a_recipe(sub), i, static_cast<int>(i % 6)));
    }
    return corpus;
}

Corpus generate_synthetic_foreign_corpus(const SynthSpec& spec, SeededRng rng) {
    Corpus corpus;
    corpus.reserve(static_cast<std::size_t>(spec.n_pairs));
    auto foreign = rng.derive("foreign-domain");
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_pairs); ++i)
        corpus.push_back(make_domain_b_pair(i, foreign.derive(i)));
    return corpus;
}

} // namespace cood::corpus
