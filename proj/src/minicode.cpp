#include "coodkit/minicode.hpp"

#include <array>
#include <cctype>
#include <set>

namespace cood::minicode {

namespace {

const std::array<const char*, 6> kKeywords = {"fn", "let", "return", "if", "else", "while"};

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace

bool is_keyword(const std::string& word) {
    for (const char* k : kKeywords)
        if (word == k) return true;
    return false;
}

std::vector<CodeToken> lex(const std::string& src) {
    std::vector<CodeToken> out;
    std::size_t i = 0;
    const std::size_t n = src.size();
    while (i < n) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const int idx = static_cast<int>(out.size());
        if (ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && ident_char(src[j])) ++j;
            std::string word = src.substr(i, j - i);
            out.push_back({is_keyword(word) ? TokenKind::keyword : TokenKind::ident,
                           std::move(word), idx});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i + 1;
            while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < n && src[j] == '.' && j + 1 < n &&
                std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            out.push_back({TokenKind::number, src.substr(i, j - i), idx});
            i = j;
        } else if (c == '"') {
            const std::size_t open = i;
            std::size_t j = i + 1;
            while (j < n && src[j] != '"') {
                if (src[j] == '\\' && j + 1 < n) ++j;  // escaped char
                ++j;
            }
            if (j >= n) throw UnterminatedString(open);
            out.push_back({TokenKind::string_lit, src.substr(i, j - i + 1), idx});
            i = j + 1;
        } else {
            out.push_back({TokenKind::punct, std::string(1, c), idx});
            ++i;
        }
    }
    return out;
}

ScopeReport analyze_scope(const std::vector<CodeToken>& tokens) {
    if (tokens.empty() || tokens[0].kind != TokenKind::keyword || tokens[0].text != "fn")
        throw NoFunction("token stream does not start with fn");
    for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i].kind == TokenKind::keyword && tokens[i].text == "fn")
            throw NoFunction("more than one fn unit");
    if (tokens.size() < 2 || tokens[1].kind != TokenKind::ident)
        throw NoFunction("fn keyword not followed by a function name");

    // balance check over the whole stream
    int paren = 0, brace = 0;
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::punct) continue;
        if (t.text == "(") ++paren;
        if (t.text == ")" && --paren < 0) throw UnbalancedDelimiters("unmatched )");
        if (t.text == "{") ++brace;
        if (t.text == "}" && --brace < 0) throw UnbalancedDelimiters("unmatched }");
    }
    if (paren != 0 || brace != 0) throw UnbalancedDelimiters("unclosed delimiter");

    ScopeReport rep;
    rep.fn_begin = 0;
    rep.fn_end = static_cast<int>(tokens.size());

    std::set<std::string> defined;
    auto define = [&](std::vector<NamedDef>& bucket, const CodeToken& tok) {
        if (defined.count(tok.text))
            throw DuplicateDefinition(tok.text + " at token " + std::to_string(tok.index));
        defined.insert(tok.text);
        bucket.push_back({tok.text, tok.index});
    };

    // parameter list: idents between the first ( and its matching )
    std::size_t i = 2;
    if (i >= tokens.size() || tokens[i].text != "(")
        throw NoFunction("missing parameter list");
    ++i;
    while (i < tokens.size() && tokens[i].text != ")") {
        if (tokens[i].kind == TokenKind::ident) define(rep.params, tokens[i]);
        ++i;
    }
    if (i >= tokens.size()) throw NoFunction("parameter list never closes");
    ++i;

    // body scan
    for (; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.kind == TokenKind::keyword && t.text == "let") {
            if (i + 1 >= tokens.size() || tokens[i + 1].kind != TokenKind::ident)
                throw NoFunction("let not followed by a name");
            define(rep.lets, tokens[i + 1]);
            ++i;
            continue;
        }
        if (t.kind != TokenKind::ident) continue;
        const bool call_target =
            i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::punct &&
            tokens[i + 1].text == "(";
        if (call_target) continue;
        if (!defined.count(t.text))
            throw UndefinedName(t.text + " at token " + std::to_string(t.index));
        rep.uses.push_back({t.text, t.index});
    }
    return rep;
}

std::string render(const std::vector<CodeToken>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i].text;
    }
    return out;
}

std::string splice_identifier(const std::vector<CodeToken>& tokens, int use_index,
                              const std::string& new_name) {
    ScopeReport rep = analyze_scope(tokens);
    bool is_use = false;
    for (const auto& u : rep.uses)
        if (u.use_index == use_index) is_use = true;
    if (!is_use) throw NotAUse("token " + std::to_string(use_index) + " is not an identifier use");
    const int def_idx = rep.def_index_of(new_name);
    if (def_idx < 0 || def_idx >= use_index)
        throw NotInScope(new_name + " is not defined before token " + std::to_string(use_index));

    std::vector<CodeToken> patched = tokens;
    patched[static_cast<std::size_t>(use_index)].text = new_name;
    return render(patched);
}

} // namespace cood::minicode
