#ifndef WEAVER_OPERATION_HPP
#define WEAVER_OPERATION_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "weaver/formula.hpp"

namespace weaver {

/// A labeled program instruction. `Assert` and `Skip` never appear in parsed
/// programs; they arise from the assume-to-assert rewrite and as identities.
struct Operation {
    enum class Kind { Skip, Assign, Assume, Assert, Lock };

    Kind kind = Kind::Skip;
    std::string label;
    std::string variable; ///< target of Assign / Lock
    IntExpr expr;         ///< right-hand side of Assign
    Formula guard;        ///< condition of Assume / Assert
    int owner = -1;       ///< process index, -1 when not tied to a process

    static Operation skip(std::string label = {});
    static Operation assign(std::string label, std::string var, IntExpr e);
    static Operation assume(std::string label, Formula guard);
    static Operation assertion(std::string label, Formula guard);
    static Operation lock(std::string label, std::string var);

    /// Body without label, e.g. `turn := 2`.
    std::string to_string() const;
};

using Trace = std::vector<Operation>;

/// Weakest precondition of a single instruction.
Formula wp(const Operation& op, const Formula& post);

/// assume(g) becomes assert(g); lock(x) becomes assert(x = 0); x := 1.
std::vector<Operation> assume_to_assert(const Operation& op);
Trace assume_to_assert(std::span<const Operation> ops);

/// wp of the assume-to-assert rewrite of `ops`, folded right to left.
Formula wp_trace(std::span<const Operation> ops, const Formula& post);

using EquivalenceCheck = std::function<bool(const Formula&, const Formula&)>;

/// True iff wp of the rewritten `ops` is equivalent to `f`. Syntactic equality
/// of the canonical forms is tried first; `equivalent` decides the rest.
bool is_stable(std::span<const Operation> ops, const Formula& f, const EquivalenceCheck& equivalent);

/// Concrete step. Returns false when the instruction blocks (or an assert fails);
/// `v` is left untouched in that case.
bool execute(const Operation& op, Valuation& v);

} // namespace weaver

#endif
