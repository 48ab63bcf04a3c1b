#ifndef WEAVER_SRC_SYNTAX_HPP
#define WEAVER_SRC_SYNTAX_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "weaver/formula.hpp"

namespace weaver::syntax {

struct Token {
    enum class Kind { Identifier, Number, Symbol, End };

    Kind kind = Kind::End;
    std::string text;
    std::size_t line = 0;
};

/// Splits `text` into identifiers, decimal numbers and operator symbols.
/// `#` starts a comment that runs to the end of the line.
std::vector<Token> tokenize(const std::string& text, std::size_t first_line = 1);

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> tokens);

    const Token& peek(std::size_t ahead = 0) const;
    const Token& next();
    bool at_end() const { return peek().kind == Token::Kind::End; }
    bool check(const std::string& text) const;
    bool accept(const std::string& text);
    const Token& expect(const std::string& text);
    std::string expect_identifier();
    std::size_t position() const { return pos_; }
    void rewind(std::size_t pos) { pos_ = pos; }
    [[noreturn]] void fail(const std::string& message) const;

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

IntExpr parse_expr(TokenStream& ts);
Formula parse_formula(TokenStream& ts);

} // namespace weaver::syntax

#endif
