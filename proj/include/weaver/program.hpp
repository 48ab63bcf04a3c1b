#ifndef WEAVER_PROGRAM_HPP
#define WEAVER_PROGRAM_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "weaver/automata.hpp"
#include "weaver/formula.hpp"
#include "weaver/operation.hpp"
#include "weaver/oracle.hpp"

namespace weaver {

struct Variable {
    std::string name;
    std::vector<Int> domain;
    Int initial = 0;
    int owner = -1; ///< process index for locals, -1 for shared
};

struct Transition {
    std::size_t from = 0;
    Operation op;
    std::size_t to = 0;
};

/// Deterministic sequential process: at most one transition per (state, label).
struct Process {
    std::string name;
    std::vector<std::string> states;
    std::size_t initial = 0;
    std::vector<Transition> transitions;
    std::map<std::size_t, Formula> assertions;
};

struct Program {
    std::vector<Variable> variables;
    std::vector<Process> processes;
    /// Alphabet in declaration order; also the tie-break order for traces.
    std::vector<std::string> labels;

    const Operation& operation(const std::string& label) const;
    /// Operations in label order.
    std::vector<Operation> alphabet() const;
    Trace trace(const Word& labels) const;

    DomainMap domains() const;
    Valuation initial_valuation() const;
    /// Conjunction of v = I(v) over all variables.
    Formula initial_formula() const;

    /// Replaces the label order; `order` must be a permutation of `labels`.
    void set_label_order(const std::vector<std::string>& order);
};

/// Throws ParseError or SemanticError.
Program parse_program(const std::string& text);

/// Interleaving product. State 0 is the initial tuple; accepting states are
/// those with an assertion, tagged with the conjunction of their components'.
struct ProductNfa {
    std::vector<std::vector<std::size_t>> tuples;
    std::vector<std::optional<Formula>> assertion;
    /// The individual assertions of the components, in process order.
    std::vector<std::vector<Formula>> obligations;
    Nfa nfa;
};

/// Throws CapExceeded.
ProductNfa compose(const Program& p, std::size_t cap = 1'000'000);

struct Blocked {
    std::size_t position = 0;
};
struct Terminated {
    Valuation valuation;
};
using ExecutionOutcome = std::variant<Blocked, Terminated>;

/// Runs `t` from the initial valuation.
ExecutionOutcome execute_trace(const Program& p, const Trace& t);

struct RemainingLanguage {
    Formula assertion;
    /// Accepts rev(w) for every product word w ending in a state that must satisfy `assertion`.
    Nfa reversed;
};

/// One group per distinct process assertion, in order of first appearance.
/// A state where several assertions are due belongs to each of their groups.
std::vector<RemainingLanguage> reversed_remaining_languages(const ProductNfa& product);

} // namespace weaver

#endif
