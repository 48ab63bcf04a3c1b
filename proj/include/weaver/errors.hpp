#ifndef WEAVER_ERRORS_HPP
#define WEAVER_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weaver {

/// A configured resource bound (assignments, product states, subset states, ...) was hit.
/// The computation's verdict is unknown, which is different from a negative answer.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(std::string what_bound, std::size_t limit)
        : std::runtime_error(what_bound + " exceeds cap " + std::to_string(limit)),
          bound_(std::move(what_bound)), limit_(limit) {}

    const std::string& bound() const noexcept { return bound_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::string bound_;
    std::size_t limit_;
};

/// The external solver died, timed out or answered something other than sat/unsat.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed syntax with an ill-formed meaning: undeclared names, duplicate labels, ...
class SemanticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EpsilonPresent : public std::logic_error {
public:
    EpsilonPresent() : std::logic_error("automaton still has epsilon transitions") {}
};

class AlphabetMismatch : public std::logic_error {
public:
    AlphabetMismatch() : std::logic_error("automata are over different alphabets") {}
};

} // namespace weaver

#endif
