#include "syntax.hpp"

#include <array>
#include <cctype>
#include <charconv>

#include "weaver/errors.hpp"

namespace weaver::syntax {

std::vector<Token> tokenize(const std::string& text, std::size_t first_line)
{
    static constexpr std::array<const char*, 8> two_char = {":=", "->", "||", "&&", "!=", "==", "<=", ">="};
    std::vector<Token> out;
    std::size_t line = first_line;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '#') {
            while (i < text.size() && text[i] != '\n')
                ++i;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            out.push_back({Token::Kind::Identifier, text.substr(i, j - i), line});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
                ++j;
            out.push_back({Token::Kind::Number, text.substr(i, j - i), line});
            i = j;
        } else {
            std::string sym(1, c);
            if (i + 1 < text.size()) {
                const std::string pair = text.substr(i, 2);
                for (const char* t : two_char)
                    if (pair == t)
                        sym = pair;
            }
            if (std::string("{}();:,=<>!+-*").find(c) == std::string::npos && sym.size() == 1)
                throw ParseError(line, std::string("unexpected character '") + c + "'");
            out.push_back({Token::Kind::Symbol, sym, line});
            i += sym.size();
        }
    }
    out.push_back({Token::Kind::End, "", line});
    return out;
}

TokenStream::TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens))
{
    if (tokens_.empty() || tokens_.back().kind != Token::Kind::End)
        tokens_.push_back({Token::Kind::End, "", tokens_.empty() ? 1 : tokens_.back().line});
}

const Token& TokenStream::peek(std::size_t ahead) const
{
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
}

const Token& TokenStream::next()
{
    const Token& t = peek();
    if (pos_ + 1 < tokens_.size())
        ++pos_;
    return t;
}

bool TokenStream::check(const std::string& text) const
{
    const Token& t = peek();
    return t.kind != Token::Kind::End && t.kind != Token::Kind::Number && t.text == text;
}

bool TokenStream::accept(const std::string& text)
{
    if (!check(text))
        return false;
    next();
    return true;
}

const Token& TokenStream::expect(const std::string& text)
{
    if (!check(text))
        fail("expected '" + text + "'");
    return next();
}

std::string TokenStream::expect_identifier()
{
    if (peek().kind != Token::Kind::Identifier)
        fail("expected identifier");
    return next().text;
}

void TokenStream::fail(const std::string& message) const
{
    const Token& t = peek();
    const std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.line, message + ", found " + found);
}

namespace {

IntExpr parse_term(TokenStream& ts);

IntExpr parse_factor(TokenStream& ts)
{
    const Token& t = ts.peek();
    if (t.kind == Token::Kind::Number) {
        Int value = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc())
            ts.fail("integer out of range");
        ts.next();
        return IntExpr::constant(value);
    }
    if (t.kind == Token::Kind::Identifier) {
        if (t.text == "true" || t.text == "false") {
            const bool b = t.text == "true";
            ts.next();
            return IntExpr::constant(b ? 1 : 0);
        }
        return IntExpr::variable(ts.next().text);
    }
    if (ts.accept("-"))
        return IntExpr::constant(0) - parse_factor(ts);
    if (ts.accept("(")) {
        IntExpr e = parse_expr(ts);
        ts.expect(")");
        return e;
    }
    ts.fail("expected expression");
}

IntExpr parse_term(TokenStream& ts)
{
    IntExpr e = parse_factor(ts);
    while (ts.accept("*"))
        e = e * parse_factor(ts);
    return e;
}

bool comparison(const Token& t, Cmp& out)
{
    if (t.kind != Token::Kind::Symbol)
        return false;
    if (t.text == "=" || t.text == "==")
        out = Cmp::Eq;
    else if (t.text == "!=")
        out = Cmp::Ne;
    else if (t.text == "<")
        out = Cmp::Lt;
    else if (t.text == "<=")
        out = Cmp::Le;
    else if (t.text == ">")
        out = Cmp::Gt;
    else if (t.text == ">=")
        out = Cmp::Ge;
    else
        return false;
    return true;
}

Formula parse_comparison(TokenStream& ts)
{
    IntExpr lhs = parse_expr(ts);
    Cmp cmp{};
    if (!comparison(ts.peek(), cmp))
        ts.fail("expected comparison operator");
    ts.next();
    IntExpr rhs = parse_expr(ts);
    return Formula::atom(lhs, cmp, rhs);
}

Formula parse_unary(TokenStream& ts)
{
    if (ts.accept("!"))
        return negate(parse_unary(ts));
    if (ts.check("true") || ts.check("false")) {
        // a bare boolean constant unless it is the operand of a comparison
        Cmp cmp{};
        if (!comparison(ts.peek(1), cmp)) {
            const bool b = ts.next().text == "true";
            return b ? Formula::truth() : Formula::falsity();
        }
    }
    if (ts.check("(")) {
        const std::size_t start = ts.position();
        try {
            return parse_comparison(ts);
        } catch (const ParseError&) {
            ts.rewind(start);
        }
        ts.expect("(");
        Formula f = parse_formula(ts);
        ts.expect(")");
        return f;
    }
    return parse_comparison(ts);
}

Formula parse_conjunction(TokenStream& ts)
{
    Formula f = parse_unary(ts);
    while (ts.accept("&&"))
        f = conjoin(f, parse_unary(ts));
    return f;
}

} // namespace

IntExpr parse_expr(TokenStream& ts)
{
    IntExpr e = parse_term(ts);
    for (;;) {
        if (ts.accept("+"))
            e = e + parse_term(ts);
        else if (ts.accept("-"))
            e = e - parse_term(ts);
        else
            return e;
    }
}

Formula parse_formula(TokenStream& ts)
{
    Formula f = parse_conjunction(ts);
    while (ts.accept("||"))
        f = disjoin(f, parse_conjunction(ts));
    return f;
}

} // namespace weaver::syntax

namespace weaver {

Formula parse_formula(const std::string& text)
{
    syntax::TokenStream ts(syntax::tokenize(text));
    Formula f = syntax::parse_formula(ts);
    if (!ts.at_end())
        ts.fail("unexpected trailing input");
    return f;
}

IntExpr parse_int_expr(const std::string& text)
{
    syntax::TokenStream ts(syntax::tokenize(text));
    IntExpr e = syntax::parse_expr(ts);
    if (!ts.at_end())
        ts.fail("unexpected trailing input");
    return e;
}

} // namespace weaver
