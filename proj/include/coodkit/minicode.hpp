#pragma once

// Lexer and flat-scope analyzer for minicode, the small code language used by
// the synthetic corpus and the variable-misuse mutator. Grammar summary:
// one `fn name(params) { ... }` unit per snippet, `let` bindings, flat scope,
// no shadowing, no nested functions. See docs/minicode.md.

#include <string>
#include <vector>

#include "coodkit/common.hpp"

namespace cood::minicode {

struct UnterminatedString : Error {
    std::size_t offset;
    explicit UnterminatedString(std::size_t byte_offset)
        : Error("UnterminatedString", "string opened at byte " + std::to_string(byte_offset)),
          offset(byte_offset) {}
};
COOD_DEFINE_ERROR(UnbalancedDelimiters);
COOD_DEFINE_ERROR(DuplicateDefinition);
COOD_DEFINE_ERROR(NoFunction);
COOD_DEFINE_ERROR(UndefinedName);
COOD_DEFINE_ERROR(NotAUse);
COOD_DEFINE_ERROR(NotInScope);

enum class TokenKind { ident, keyword, number, string_lit, punct };

struct CodeToken {
    TokenKind kind;
    std::string text;  // raw lexeme; string literals keep their quotes
    int index;         // position in the token stream

    bool operator==(const CodeToken&) const = default;
};

bool is_keyword(const std::string& word);  // fn let return if else while

// Maximal-munch tokenization. Identifiers [A-Za-z_][A-Za-z0-9_]*, numbers
// digit runs with an optional decimal part, double-quoted strings with
// backslash escapes, all other non-space characters single-char puncts.
std::vector<CodeToken> lex(const std::string& source);

struct NamedDef {
    std::string name;
    int def_index;
};
struct NameUse {
    std::string name;
    int use_index;
};

struct ScopeReport {
    std::vector<NamedDef> params;
    std::vector<NamedDef> lets;
    std::vector<NameUse> uses;
    int fn_begin = 0;  // token span of the function unit
    int fn_end = 0;    // exclusive

    std::vector<NamedDef> all_defs() const {
        std::vector<NamedDef> d = params;
        d.insert(d.end(), lets.begin(), lets.end());
        return d;
    }
    bool defines(const std::string& name) const {
        for (const auto& d : params)
            if (d.name == name) return true;
        for (const auto& d : lets)
            if (d.name == name) return true;
        return false;
    }
    int def_index_of(const std::string& name) const {
        for (const auto& d : params)
            if (d.name == name) return d.def_index;
        for (const auto& d : lets)
            if (d.name == name) return d.def_index;
        return -1;
    }
};

// Defs are parameter names plus names immediately following `let`; uses are
// all other identifier occurrences except the function name, call targets
// (ident directly followed by `(`), and def sites.
ScopeReport analyze_scope(const std::vector<CodeToken>& tokens);

// Canonical rendering: tokens joined by single spaces. lex(render(t)) == t.
std::string render(const std::vector<CodeToken>& tokens);

// Replaces the identifier use at use_index with new_name (which must be
// defined earlier in scope) and returns the re-rendered source.
std::string splice_identifier(const std::vector<CodeToken>& tokens, int use_index,
                              const std::string& new_name);

} // namespace cood::minicode
