#ifndef WEAVER_FORMULA_HPP
#define WEAVER_FORMULA_HPP

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

/**
 * Quantifier-free formulas over integer program variables.
 *
 * Every Formula is kept in a canonical conjunctive normal form. Atoms are
 * linear-normalized (everything moved to one side, integer gcd divided out,
 * strict bounds tightened) so that ground or arithmetically trivial atoms
 * fold to true/false as soon as they appear, e.g. after substitution.
 */
namespace weaver {

using Int = std::int64_t;

/// Total map from variable names to values.
using Valuation = std::map<std::string, Int>;

/// Integer expression tree: constants, variables and +, -, *.
class IntExpr {
public:
    enum class Kind { Constant, Variable, Add, Sub, Mul };

    IntExpr() : IntExpr(constant(0)) {}

    static IntExpr constant(Int value);
    static IntExpr variable(std::string name);
    static IntExpr binary(Kind kind, IntExpr lhs, IntExpr rhs);

    Kind kind() const { return node_->kind; }
    Int value() const { return node_->value; }
    const std::string& name() const { return node_->name; }
    const IntExpr& lhs() const { return node_->children[0]; }
    const IntExpr& rhs() const { return node_->children[1]; }

    /// Throws std::out_of_range if a variable is missing from `v`.
    Int evaluate(const Valuation& v) const;
    void collect_variables(std::set<std::string>& out) const;
    std::string to_string() const;

private:
    struct Node {
        Kind kind = Kind::Constant;
        Int value = 0;
        std::string name;
        std::vector<IntExpr> children;
    };
    explicit IntExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

IntExpr operator+(IntExpr a, IntExpr b);
IntExpr operator-(IntExpr a, IntExpr b);
IntExpr operator*(IntExpr a, IntExpr b);

/// Sorted multiset of variable names; the empty monomial is the constant term.
using Monomial = std::vector<std::string>;

/// Sum of monomials with nonzero integer coefficients.
class Polynomial {
public:
    Polynomial() = default;
    static Polynomial constant(Int c);
    static Polynomial variable(const std::string& name);
    static Polynomial from_expr(const IntExpr& e);

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    Polynomial operator-() const;

    Polynomial substitute(const std::string& var, const Polynomial& replacement) const;

    bool is_constant() const;
    Int constant_term() const;
    bool is_linear() const;
    bool mentions(const std::string& var) const;
    const std::map<Monomial, Int>& terms() const { return terms_; }
    Int evaluate(const Valuation& v) const;
    void collect_variables(std::set<std::string>& out) const;

    auto operator<=>(const Polynomial&) const = default;

private:
    void add_term(const Monomial& m, Int c);
    std::map<Monomial, Int> terms_;
};

/// Canonical atom: `poly = 0` or `poly <= 0`. Every comparison
/// (=, !=, <, <=, >, >=) normalizes to one of these plus a negation flag.
struct Atom {
    enum class Relation { Eq, Le };

    Polynomial poly;
    Relation relation = Relation::Eq;

    auto operator<=>(const Atom&) const = default;
};

/// Comparison operators accepted when building atoms from expressions.
enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };

/// The negation flag is only ever set on equalities: a negated `p <= 0`
/// is stored as `-p + 1 <= 0`.
struct Literal {
    Atom atom;
    bool negated = false;

    auto operator<=>(const Literal&) const = default;
};

/// Result of normalizing a comparison: a literal or a folded constant.
using FoldedLiteral = std::variant<bool, Literal>;

FoldedLiteral make_literal(const Polynomial& lhs, Cmp cmp, const Polynomial& rhs);
FoldedLiteral make_literal(const IntExpr& lhs, Cmp cmp, const IntExpr& rhs);
FoldedLiteral negate(const Literal& l);
bool evaluate(const Literal& l, const Valuation& v);

using Clause = std::vector<Literal>;

/**
 * CNF formula. TRUE is the empty clause list; FALSE is a single empty clause.
 * Instances are canonical on construction: literals sorted and unique within
 * a clause, tautological clauses dropped, clauses sorted and unique.
 */
class Formula {
public:
    /// TRUE
    Formula() = default;

    static Formula truth() { return Formula(); }
    static Formula falsity();
    static Formula literal(const Literal& l);
    static Formula folded(const FoldedLiteral& l);
    static Formula atom(const IntExpr& lhs, Cmp cmp, const IntExpr& rhs);
    static Formula from_clauses(std::vector<Clause> clauses);

    const std::vector<Clause>& clauses() const { return clauses_; }

    bool is_true() const { return clauses_.empty(); }
    bool is_false() const { return clauses_.size() == 1 && clauses_.front().empty(); }
    /// A single literal, or one of the constants.
    bool is_literal() const;
    /// Two or more clauses.
    bool is_conjunction() const { return clauses_.size() >= 2; }
    /// A single clause of two or more literals.
    bool is_disjunction() const { return clauses_.size() == 1 && clauses_.front().size() >= 2; }
    bool is_compound() const { return !is_literal(); }

    /// Number of literal occurrences.
    std::size_t size() const;

    /// Readable infix form that the formula parser accepts back.
    std::string to_string() const;
    /// SMT-LIB2 term.
    std::string to_smtlib() const;

    auto operator<=>(const Formula&) const = default;

private:
    std::vector<Clause> clauses_;
};

Formula conjoin(const Formula& a, const Formula& b);
Formula disjoin(const Formula& a, const Formula& b);
Formula negate(const Formula& f);
Formula conjoin_all(const std::vector<Formula>& fs);
Formula disjoin_all(const std::vector<Formula>& fs);

/// Re-canonicalizes; an identity on any Formula value, exposed for testing idempotence.
Formula canonicalize(const Formula& f);

Formula substitute(const Formula& f, const std::string& var, const IntExpr& e);
bool evaluate(const Formula& f, const Valuation& v);
std::set<std::string> free_variables(const Formula& f);
bool is_linear(const Formula& f);

std::string to_string(const Literal& l);
std::string to_smtlib(const Literal& l);

/// Parses the infix formula syntax (`||`, `&&`, `!`, comparisons, + - *).
/// Throws ParseError.
Formula parse_formula(const std::string& text);
IntExpr parse_int_expr(const std::string& text);

} // namespace weaver

#endif
