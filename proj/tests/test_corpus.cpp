#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "coodkit/corpus.hpp"
#include "coodkit/minicode.hpp"

using namespace cood;
using corpus::BimodalPair;
using corpus::Corpus;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

BimodalPair make_pair(const std::string& id, const std::string& comment,
                      const std::string& code) {
    BimodalPair p;
    p.id = id;
    p.comment = comment;
    p.code = code;
    return p;
}

// deterministic pseudo-random pair with arbitrary text content
BimodalPair random_pair(SeededRng& rng, int i) {
    BimodalPair p;
    p.id = "r" + std::to_string(i);
    p.comment = "comment " + std::to_string(rng.next_below(1000)) + " with, punct.";
    p.code = "fn f" + std::to_string(rng.next_below(1000)) + "(a) { return a; }";
    p.scenario = (i % 2) ? corpus::Scenario::id : corpus::Scenario::misaligned;
    p.label = (i % 2) ? 1 : 0;
    p.meta["k" + std::to_string(i % 3)] = "v" + std::to_string(rng.next_below(50));
    return p;
}

} // namespace

TEST_CASE("tokenize_comment rules") {
    CHECK(corpus::tokenize_comment("Returns the sum.") ==
          std::vector<std::string>{"returns", "the", "sum", "."});
    CHECK(corpus::tokenize_comment("a,b") == std::vector<std::string>{"a", ",", "b"});
    CHECK(corpus::tokenize_comment("  x  ") == std::vector<std::string>{"x"});
    CHECK_THROWS_AS(corpus::tokenize_comment(""), corpus::EmptyText);
    CHECK_THROWS_AS(corpus::tokenize_comment("   "), corpus::EmptyText);
}

TEST_CASE("tokenize_comment is concatenation-stable") {
    const std::vector<std::string> samples = {"Alpha, beta.", "one two THREE", "x.y,z",
                                              "hello (world)"};
    for (const auto& a : samples)
        for (const auto& b : samples) {
            auto joined = corpus::tokenize_comment(a + " " + b);
            auto left = corpus::tokenize_comment(a);
            auto right = corpus::tokenize_comment(b);
            left.insert(left.end(), right.begin(), right.end());
            CHECK(joined == left);
        }
}

TEST_CASE("tokenize_code rules") {
    CHECK(corpus::tokenize_code("let c = a + b;") ==
          std::vector<std::string>{"let", "c", "=", "a", "+", "b", ";"});
    CHECK(corpus::tokenize_code("f(x)") == std::vector<std::string>{"f", "(", "x", ")"});
    CHECK_THROWS_AS(corpus::tokenize_code(""), corpus::EmptyText);
    // unterminated string falls back to the generic splitter, case preserved
    CHECK(corpus::tokenize_code("print(\"abc") ==
          std::vector<std::string>{"print", "(", "\"", "abc"});
    CHECK(corpus::tokenize_code("Foo_bar Baz") == std::vector<std::string>{"Foo_bar", "Baz"});
}

TEST_CASE("build_vocab ordering and filtering") {
    Corpus c = {make_pair("1", "a a", "b")};
    SUBCASE("frequency order") {
        auto v = corpus::build_vocab(c, 1, 100);
        CHECK(v.tokens == std::vector<std::string>{"<pad>", "<unk>", "a", "b"});
        CHECK(v.lookup("a") == 2);
        CHECK(v.lookup("zzz") == corpus::Vocabulary::kUnk);
    }
    SUBCASE("min_freq filters everything") {
        auto v = corpus::build_vocab(c, 3, 100);
        CHECK(v.tokens == std::vector<std::string>{"<pad>", "<unk>"});
    }
    SUBCASE("lexicographic tie break") {
        Corpus c2 = {make_pair("1", "y x", "x y")};
        auto v = corpus::build_vocab(c2, 1, 100);
        CHECK(v.tokens == std::vector<std::string>{"<pad>", "<unk>", "x", "y"});
    }
    SUBCASE("max_size truncation") {
        Corpus c3 = {make_pair("1", "a a a b b c", "d")};
        auto v = corpus::build_vocab(c3, 1, 4);
        CHECK(v.size() == 4);  // pad, unk, a, b
        CHECK(v.lookup("c") == corpus::Vocabulary::kUnk);
    }
    CHECK_THROWS_AS(corpus::build_vocab({}, 1, 10), corpus::EmptyCorpus);
}

TEST_CASE("vocab json round trip") {
    Corpus c = {make_pair("1", "alpha beta alpha", "gamma")};
    auto v = corpus::build_vocab(c, 1, 64);
    auto v2 = corpus::vocab_from_json(corpus::vocab_to_json(v));
    CHECK(v2.tokens == v.tokens);
    CHECK(v2.min_freq == v.min_freq);
    CHECK(v2.max_size == v.max_size);
    CHECK(v2.lookup("beta") == v.lookup("beta"));
}

TEST_CASE("encode_pair padding, truncation, UNK") {
    Corpus c = {make_pair("1", "alpha", "beta")};
    auto v = corpus::build_vocab(c, 1, 64);
    SUBCASE("padding") {
        auto e = corpus::encode_pair(make_pair("2", "alpha", "beta"), v, 3, 3);
        CHECK(e.comment_ids == std::vector<int>{v.lookup("alpha"), 0, 0});
        CHECK(e.comment_len == 1);
    }
    SUBCASE("oov to UNK") {
        auto e = corpus::encode_pair(make_pair("2", "missing", "beta"), v, 3, 3);
        CHECK(e.comment_ids[0] == corpus::Vocabulary::kUnk);
    }
    SUBCASE("truncation keeps the first max_len tokens") {
        auto e = corpus::encode_pair(make_pair("2", "a b c d e", "beta"), v, 3, 3);
        CHECK(e.comment_len == 3);
        CHECK(e.comment_ids.size() == 3);
    }
    SUBCASE("never emits an index outside the vocab") {
        SeededRng rng(5);
        for (int i = 0; i < 50; ++i) {
            auto e = corpus::encode_pair(random_pair(rng, i), v, 8, 16);
            for (int id : e.comment_ids) CHECK((id >= 0 && id < v.size()));
            for (int id : e.code_ids) CHECK((id >= 0 && id < v.size()));
        }
    }
}

TEST_CASE("jsonl round trip and error contracts") {
    const std::string path = temp_path("coodkit_test_corpus.jsonl");
    SUBCASE("empty file gives an empty corpus") {
        std::ofstream(path).close();
        CHECK(corpus::load_jsonl(path).empty());
    }
    SUBCASE("malformed line reported with its number") {
        std::ofstream out(path);
        out << R"({"id":"1","comment":"c","code":"x","scenario":"id","label":1,"meta":{}})"
            << "\n";
        out << R"({"id":"2","comment":"c","code":"x","scenario":"id","label":1,"meta":{}})"
            << "\n";
        out << "{nope}\n";
        out.close();
        try {
            corpus::load_jsonl(path);
            FAIL("expected ParseError");
        } catch (const corpus::ParseError& e) {
            CHECK(e.line == 3);
        }
    }
    SUBCASE("missing field") {
        std::ofstream out(path);
        out << R"({"id":"1","comment":"c","scenario":"id","label":1,"meta":{}})" << "\n";
        out.close();
        CHECK_THROWS_AS(corpus::load_jsonl(path), corpus::MissingField);
    }
    SUBCASE("save then load 100 random pairs is the identity") {
        SeededRng rng(17);
        Corpus c;
        for (int i = 0; i < 100; ++i) c.push_back(random_pair(rng, i));
        corpus::save_jsonl(c, path);
        auto back = corpus::load_jsonl(path);
        REQUIRE(back.size() == c.size());
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(back[i] == c[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("length_matched_sample") {
    auto with_len = [](int id, int len) {
        std::string words;
        for (int i = 0; i < len; ++i) words += "w" + std::to_string(i) + " ";
        return make_pair("p" + std::to_string(id), words, "fn f(a) { return a; }");
    };

    SUBCASE("single-bin reference samples from that bin") {
        Corpus ref, src;
        for (int i = 0; i < 10; ++i) ref.push_back(with_len(i, 4));
        for (int i = 0; i < 30; ++i) src.push_back(with_len(100 + i, (i % 2) ? 5 : 20));
        auto out = corpus::length_matched_sample(ref, src, 10, 8, SeededRng(1));
        REQUIRE(out.size() == 10);
        for (const auto& p : out) CHECK(corpus::comment_token_length(p) < 8);
    }
    SUBCASE("n = 0 gives an empty sample") {
        Corpus ref = {with_len(0, 4)};
        Corpus src = {with_len(1, 4)};
        CHECK(corpus::length_matched_sample(ref, src, 0, 8, SeededRng(1)).empty());
    }
    SUBCASE("50/50 reference over two bins lands 5 per bin") {
        // brute-force histogram oracle: count output lengths per bin
        Corpus ref, src;
        for (int i = 0; i < 10; ++i) ref.push_back(with_len(i, (i % 2) ? 4 : 12));
        for (int i = 0; i < 40; ++i) src.push_back(with_len(100 + i, (i % 2) ? 5 : 13));
        auto out = corpus::length_matched_sample(ref, src, 10, 8, SeededRng(2));
        REQUIRE(out.size() == 10);
        int low = 0, high = 0;
        for (const auto& p : out)
            (corpus::comment_token_length(p) / 8 == 0 ? low : high)++;
        CHECK(std::abs(low - 5) <= 1);
        CHECK(std::abs(high - 5) <= 1);
    }
    SUBCASE("sample is a sub-multiset of the source") {
        Corpus ref, src;
        for (int i = 0; i < 6; ++i) ref.push_back(with_len(i, 4 + i));
        for (int i = 0; i < 25; ++i) src.push_back(with_len(100 + i, 3 + (i % 12)));
        auto out = corpus::length_matched_sample(ref, src, 12, 4, SeededRng(3));
        std::multiset<std::string> src_ids, out_ids;
        for (const auto& p : src) src_ids.insert(p.id);
        for (const auto& p : out) out_ids.insert(p.id);
        for (const auto& id : out_ids) CHECK(src_ids.count(id) >= out_ids.count(id));
    }
    SUBCASE("insufficient source") {
        Corpus ref = {with_len(0, 4)};
        Corpus src = {with_len(1, 4)};
        CHECK_THROWS_AS(corpus::length_matched_sample(ref, src, 5, 8, SeededRng(1)),
                        corpus::InsufficientSource);
    }
    SUBCASE("deterministic for a fixed seed") {
        Corpus ref, src;
        for (int i = 0; i < 8; ++i) ref.push_back(with_len(i, 4 + (i % 6)));
        for (int i = 0; i < 30; ++i) src.push_back(with_len(100 + i, 3 + (i % 9)));
        auto a = corpus::length_matched_sample(ref, src, 9, 4, SeededRng(9));
        auto b = corpus::length_matched_sample(ref, src, 9, 4, SeededRng(9));
        CHECK(a == b);
    }
}

TEST_CASE("synthetic corpus generator") {
    corpus::SynthSpec spec;
    spec.n_pairs = 60;

    SUBCASE("comment mentions the function's identifier stem") {
        corpus::SynthSpec one;
        one.n_pairs = 1;
        auto c = corpus::generate_synthetic_corpus(one, SeededRng(42));
        REQUIRE(c.size() == 1);
        auto toks = minicode::lex(c[0].code);
        REQUIRE(toks.size() > 2);
        const std::string fname = toks[1].text;  // fn <name>
        auto words = corpus::tokenize_comment(c[0].comment);
        CHECK(std::count(words.begin(), words.end(), fname) > 0);
    }
    SUBCASE("same seed gives byte-identical corpora") {
        auto a = corpus::generate_synthetic_corpus(spec, SeededRng(7));
        auto b = corpus::generate_synthetic_corpus(spec, SeededRng(7));
        CHECK(a == b);
        auto fa = corpus::generate_synthetic_foreign_corpus(spec, SeededRng(7));
        auto fb = corpus::generate_synthetic_foreign_corpus(spec, SeededRng(7));
        CHECK(fa == fb);
    }
    SUBCASE("domain content vocabularies are disjoint") {
        // set-intersection oracle: shared tokens must be stopwords,
        // punctuation, minicode structure keywords, or digit literals
        auto a = corpus::generate_synthetic_corpus(spec, SeededRng(7));
        auto b = corpus::generate_synthetic_foreign_corpus(spec, SeededRng(7));
        auto tokens_of = [](const Corpus& c) {
            std::set<std::string> toks;
            for (const auto& p : c) {
                for (const auto& t : corpus::tokenize_comment(p.comment)) toks.insert(t);
                for (const auto& t : corpus::tokenize_code(p.code)) toks.insert(t);
            }
            return toks;
        };
        const auto ta = tokens_of(a);
        const auto tb = tokens_of(b);
        for (const auto& tok : ta) {
            if (!tb.count(tok)) continue;
            const bool structural = minicode::is_keyword(tok) ||
                                    std::isdigit(static_cast<unsigned char>(tok[0]));
            INFO(tok);
            CHECK((corpus::is_stopword(tok) || structural));
        }
    }
    SUBCASE("all pairs lex as minicode and carry the id invariants") {
        auto a = corpus::generate_synthetic_corpus(spec, SeededRng(8));
        for (const auto& p : a) {
            CHECK(p.label == 1);
            CHECK(p.scenario == corpus::Scenario::id);
            CHECK(!p.comment.empty());
            CHECK_NOTHROW(minicode::analyze_scope(minicode::lex(p.code)));
        }
    }
}

TEST_CASE("stopword list covers punctuation and function words") {
    CHECK(corpus::is_stopword("the"));
    CHECK(corpus::is_stopword(","));
    CHECK(corpus::is_stopword("."));
    CHECK_FALSE(corpus::is_stopword("delta"));
    CHECK(corpus::stopword_list().size() >= 45);
}
