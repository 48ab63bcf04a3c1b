#include "weaver/formula.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace weaver {

// ---------------------------------------------------------------------------
// IntExpr

IntExpr IntExpr::constant(Int value)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = value;
    return IntExpr(std::move(n));
}

IntExpr IntExpr::variable(std::string name)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->name = std::move(name);
    return IntExpr(std::move(n));
}

IntExpr IntExpr::binary(Kind kind, IntExpr lhs, IntExpr rhs)
{
    if (kind == Kind::Constant || kind == Kind::Variable)
        throw std::invalid_argument("IntExpr::binary needs an arithmetic operator");
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->children = {std::move(lhs), std::move(rhs)};
    return IntExpr(std::move(n));
}

IntExpr operator+(IntExpr a, IntExpr b) { return IntExpr::binary(IntExpr::Kind::Add, std::move(a), std::move(b)); }
IntExpr operator-(IntExpr a, IntExpr b) { return IntExpr::binary(IntExpr::Kind::Sub, std::move(a), std::move(b)); }
IntExpr operator*(IntExpr a, IntExpr b) { return IntExpr::binary(IntExpr::Kind::Mul, std::move(a), std::move(b)); }

Int IntExpr::evaluate(const Valuation& v) const
{
    switch (kind()) {
    case Kind::Constant: return value();
    case Kind::Variable: return v.at(name());
    case Kind::Add: return lhs().evaluate(v) + rhs().evaluate(v);
    case Kind::Sub: return lhs().evaluate(v) - rhs().evaluate(v);
    case Kind::Mul: return lhs().evaluate(v) * rhs().evaluate(v);
    }
    return 0;
}

void IntExpr::collect_variables(std::set<std::string>& out) const
{
    if (kind() == Kind::Variable) {
        out.insert(name());
    } else if (kind() != Kind::Constant) {
        lhs().collect_variables(out);
        rhs().collect_variables(out);
    }
}

namespace {

int precedence(IntExpr::Kind k)
{
    switch (k) {
    case IntExpr::Kind::Add:
    case IntExpr::Kind::Sub: return 1;
    case IntExpr::Kind::Mul: return 2;
    default: return 3;
    }
}

} // namespace

std::string IntExpr::to_string() const
{
    switch (kind()) {
    case Kind::Constant: return std::to_string(value());
    case Kind::Variable: return name();
    default: break;
    }
    const int p = precedence(kind());
    std::string l = lhs().to_string();
    std::string r = rhs().to_string();
    if (precedence(lhs().kind()) < p)
        l = "(" + l + ")";
    // right operand of '-' needs parentheses at equal precedence
    if (precedence(rhs().kind()) < p || (kind() == Kind::Sub && precedence(rhs().kind()) == p))
        r = "(" + r + ")";
    const char* op = kind() == Kind::Add ? " + " : kind() == Kind::Sub ? " - " : " * ";
    return l + op + r;
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::constant(Int c)
{
    Polynomial p;
    p.add_term({}, c);
    return p;
}

Polynomial Polynomial::variable(const std::string& name)
{
    Polynomial p;
    p.add_term({name}, 1);
    return p;
}

Polynomial Polynomial::from_expr(const IntExpr& e)
{
    switch (e.kind()) {
    case IntExpr::Kind::Constant: return constant(e.value());
    case IntExpr::Kind::Variable: return variable(e.name());
    case IntExpr::Kind::Add: return from_expr(e.lhs()) + from_expr(e.rhs());
    case IntExpr::Kind::Sub: return from_expr(e.lhs()) - from_expr(e.rhs());
    case IntExpr::Kind::Mul: return from_expr(e.lhs()) * from_expr(e.rhs());
    }
    return {};
}

void Polynomial::add_term(const Monomial& m, Int c)
{
    if (c == 0)
        return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0)
            terms_.erase(it);
    }
}

Polynomial operator+(const Polynomial& a, const Polynomial& b)
{
    Polynomial r = a;
    for (const auto& [m, c] : b.terms_)
        r.add_term(m, c);
    return r;
}

Polynomial Polynomial::operator-() const
{
    Polynomial r;
    for (const auto& [m, c] : terms_)
        r.terms_.emplace(m, -c);
    return r;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b)
{
    Polynomial r;
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            Monomial m;
            m.reserve(ma.size() + mb.size());
            std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(m));
            r.add_term(m, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::substitute(const std::string& var, const Polynomial& replacement) const
{
    if (!mentions(var))
        return *this;
    Polynomial result;
    for (const auto& [m, c] : terms_) {
        Monomial rest;
        std::size_t power = 0;
        for (const auto& name : m) {
            if (name == var)
                ++power;
            else
                rest.push_back(name);
        }
        Polynomial term;
        term.add_term(rest, c);
        for (std::size_t i = 0; i < power; ++i)
            term = term * replacement;
        result = result + term;
    }
    return result;
}

bool Polynomial::is_constant() const
{
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Int Polynomial::constant_term() const
{
    auto it = terms_.find(Monomial{});
    return it == terms_.end() ? 0 : it->second;
}

bool Polynomial::is_linear() const
{
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.first.size() <= 1; });
}

bool Polynomial::mentions(const std::string& var) const
{
    for (const auto& [m, c] : terms_)
        if (std::find(m.begin(), m.end(), var) != m.end())
            return true;
    return false;
}

Int Polynomial::evaluate(const Valuation& v) const
{
    Int sum = 0;
    for (const auto& [m, c] : terms_) {
        Int t = c;
        for (const auto& name : m)
            t *= v.at(name);
        sum += t;
    }
    return sum;
}

void Polynomial::collect_variables(std::set<std::string>& out) const
{
    for (const auto& [m, c] : terms_)
        out.insert(m.begin(), m.end());
}

// ---------------------------------------------------------------------------
// Literals

namespace {

Int floor_div(Int a, Int b)
{
    Int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

Int ceil_div(Int a, Int b) { return -floor_div(-a, b); }

/// Normalizes `p rel 0` over the integers.
FoldedLiteral normalize(Polynomial p, Atom::Relation rel, bool negated)
{
    if (p.is_constant()) {
        const Int c = p.constant_term();
        const bool holds = rel == Atom::Relation::Eq ? (c == 0) : (c <= 0);
        return holds != negated;
    }
    Int g = 0;
    for (const auto& [m, c] : p.terms())
        if (!m.empty())
            g = std::gcd(g, c < 0 ? -c : c);
    const Int c0 = p.constant_term();

    Polynomial q;
    if (rel == Atom::Relation::Eq) {
        if (c0 % g != 0)
            return negated; // no integer solution
        for (const auto& [m, c] : p.terms())
            q = q + Polynomial::constant(c / g) * [&] {
                Polynomial mono = Polynomial::constant(1);
                for (const auto& name : m)
                    mono = mono * Polynomial::variable(name);
                return mono;
            }();
        // leading non-constant coefficient positive
        for (const auto& [m, c] : q.terms()) {
            if (m.empty())
                continue;
            if (c < 0)
                q = -q;
            break;
        }
        return Literal{Atom{std::move(q), rel}, negated};
    }

    // p <= 0, possibly negated: !(p <= 0) <=> -p + 1 <= 0
    if (negated) {
        return normalize(-p + Polynomial::constant(1), rel, false);
    }
    for (const auto& [m, c] : p.terms()) {
        if (m.empty())
            continue;
        Polynomial mono = Polynomial::constant(c / g);
        for (const auto& name : m)
            mono = mono * Polynomial::variable(name);
        q = q + mono;
    }
    q = q + Polynomial::constant(ceil_div(c0, g));
    return Literal{Atom{std::move(q), rel}, false};
}

} // namespace

FoldedLiteral make_literal(const Polynomial& lhs, Cmp cmp, const Polynomial& rhs)
{
    using R = Atom::Relation;
    const Polynomial one = Polynomial::constant(1);
    switch (cmp) {
    case Cmp::Eq: return normalize(lhs - rhs, R::Eq, false);
    case Cmp::Ne: return normalize(lhs - rhs, R::Eq, true);
    case Cmp::Lt: return normalize(lhs - rhs + one, R::Le, false);
    case Cmp::Le: return normalize(lhs - rhs, R::Le, false);
    case Cmp::Gt: return normalize(rhs - lhs + one, R::Le, false);
    case Cmp::Ge: return normalize(rhs - lhs, R::Le, false);
    }
    return false;
}

FoldedLiteral make_literal(const IntExpr& lhs, Cmp cmp, const IntExpr& rhs)
{
    return make_literal(Polynomial::from_expr(lhs), cmp, Polynomial::from_expr(rhs));
}

FoldedLiteral negate(const Literal& l)
{
    return normalize(l.atom.poly, l.atom.relation, !l.negated);
}

bool evaluate(const Literal& l, const Valuation& v)
{
    const Int x = l.atom.poly.evaluate(v);
    const bool holds = l.atom.relation == Atom::Relation::Eq ? x == 0 : x <= 0;
    return holds != l.negated;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string monomial_text(const Monomial& m)
{
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i)
            s += "*";
        s += m[i];
    }
    return s;
}

/// Joins `coef*mono` terms with '+', all coefficients positive; appends `constant` if nonzero.
std::string side_text(const std::vector<std::pair<Monomial, Int>>& terms, Int constant)
{
    std::string s;
    for (const auto& [m, c] : terms) {
        if (!s.empty())
            s += " + ";
        if (c != 1)
            s += std::to_string(c) + "*";
        s += monomial_text(m);
    }
    if (s.empty())
        return std::to_string(constant);
    if (constant > 0)
        s += " + " + std::to_string(constant);
    else if (constant < 0)
        s += " - " + std::to_string(-constant);
    return s;
}

struct Sides {
    std::vector<std::pair<Monomial, Int>> pos;
    std::vector<std::pair<Monomial, Int>> neg;
    Int c = 0;
};

Sides split(const Polynomial& p)
{
    Sides s;
    for (const auto& [m, c] : p.terms()) {
        if (m.empty())
            s.c = c;
        else if (c > 0)
            s.pos.emplace_back(m, c);
        else
            s.neg.emplace_back(m, -c);
    }
    return s;
}

std::string smt_side(const std::vector<std::pair<Monomial, Int>>& terms, Int constant)
{
    std::vector<std::string> parts;
    for (const auto& [m, c] : terms) {
        std::string mono;
        if (m.size() == 1) {
            mono = m[0];
        } else {
            mono = "(*";
            for (const auto& n : m)
                mono += " " + n;
            mono += ")";
        }
        parts.push_back(c == 1 ? mono : "(* " + std::to_string(c) + " " + mono + ")");
    }
    if (constant != 0 || parts.empty())
        parts.push_back(constant < 0 ? "(- " + std::to_string(-constant) + ")" : std::to_string(constant));
    if (parts.size() == 1)
        return parts[0];
    std::string s = "(+";
    for (const auto& p : parts)
        s += " " + p;
    return s + ")";
}

} // namespace

std::string to_string(const Literal& l)
{
    Sides s = split(l.atom.poly);
    if (l.atom.relation == Atom::Relation::Eq) {
        // L + c = R  ->  L = R - c
        if (s.pos.empty())
            std::swap(s.pos, s.neg), s.c = -s.c;
        return side_text(s.pos, 0) + (l.negated ? " != " : " = ") + side_text(s.neg, -s.c);
    }
    // L - R + c <= 0
    if (s.pos.empty())
        return side_text(s.neg, 0) + " >= " + std::to_string(s.c);
    if (s.c >= 1)
        return side_text(s.pos, s.c - 1) + " < " + side_text(s.neg, 0);
    return side_text(s.pos, 0) + " <= " + side_text(s.neg, -s.c);
}

std::string to_smtlib(const Literal& l)
{
    Sides s = split(l.atom.poly);
    const std::string lhs = smt_side(s.pos, 0);
    const std::string rhs = smt_side(s.neg, -s.c);
    if (l.atom.relation == Atom::Relation::Le)
        return "(<= " + lhs + " " + rhs + ")";
    std::string eq = "(= " + lhs + " " + rhs + ")";
    return l.negated ? "(not " + eq + ")" : eq;
}

// ---------------------------------------------------------------------------
// Formula

namespace {

bool complementary(const Literal& a, const Literal& b)
{
    auto n = negate(a);
    const auto* lit = std::get_if<Literal>(&n);
    return lit && *lit == b;
}

} // namespace

Formula Formula::falsity()
{
    Formula f;
    f.clauses_.emplace_back();
    return f;
}

Formula Formula::literal(const Literal& l)
{
    Formula f;
    f.clauses_.push_back({l});
    return f;
}

Formula Formula::folded(const FoldedLiteral& l)
{
    if (const bool* b = std::get_if<bool>(&l))
        return *b ? truth() : falsity();
    return literal(std::get<Literal>(l));
}

Formula Formula::atom(const IntExpr& lhs, Cmp cmp, const IntExpr& rhs)
{
    return folded(make_literal(lhs, cmp, rhs));
}

Formula Formula::from_clauses(std::vector<Clause> clauses)
{
    std::vector<Clause> kept;
    kept.reserve(clauses.size());
    for (auto& c : clauses) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        if (c.empty())
            return falsity();
        bool tautology = false;
        for (std::size_t i = 0; i < c.size() && !tautology; ++i)
            for (std::size_t j = i + 1; j < c.size() && !tautology; ++j)
                tautology = complementary(c[i], c[j]);
        if (!tautology)
            kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    Formula f;
    f.clauses_ = std::move(kept);
    return f;
}

bool Formula::is_literal() const
{
    return clauses_.empty() || (clauses_.size() == 1 && clauses_.front().size() <= 1);
}

std::size_t Formula::size() const
{
    std::size_t n = 0;
    for (const auto& c : clauses_)
        n += c.size();
    return n;
}

std::string Formula::to_string() const
{
    if (is_true())
        return "true";
    if (is_false())
        return "false";
    std::string s;
    for (std::size_t i = 0; i < clauses_.size(); ++i) {
        if (i)
            s += " && ";
        const auto& c = clauses_[i];
        const bool paren = clauses_.size() > 1 && c.size() > 1;
        if (paren)
            s += "(";
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (j)
                s += " || ";
            s += weaver::to_string(c[j]);
        }
        if (paren)
            s += ")";
    }
    return s;
}

std::string Formula::to_smtlib() const
{
    if (is_true())
        return "true";
    if (is_false())
        return "false";
    auto clause_text = [](const Clause& c) {
        if (c.size() == 1)
            return weaver::to_smtlib(c[0]);
        std::string s = "(or";
        for (const auto& l : c)
            s += " " + weaver::to_smtlib(l);
        return s + ")";
    };
    if (clauses_.size() == 1)
        return clause_text(clauses_[0]);
    std::string s = "(and";
    for (const auto& c : clauses_)
        s += " " + clause_text(c);
    return s + ")";
}

Formula conjoin(const Formula& a, const Formula& b)
{
    if (a.is_false() || b.is_true())
        return a;
    if (b.is_false() || a.is_true())
        return b;
    std::vector<Clause> cs = a.clauses();
    cs.insert(cs.end(), b.clauses().begin(), b.clauses().end());
    return Formula::from_clauses(std::move(cs));
}

Formula disjoin(const Formula& a, const Formula& b)
{
    if (a.is_true() || b.is_false())
        return a;
    if (b.is_true() || a.is_false())
        return b;
    std::vector<Clause> cs;
    cs.reserve(a.clauses().size() * b.clauses().size());
    for (const auto& ca : a.clauses()) {
        for (const auto& cb : b.clauses()) {
            Clause c = ca;
            c.insert(c.end(), cb.begin(), cb.end());
            cs.push_back(std::move(c));
        }
    }
    return Formula::from_clauses(std::move(cs));
}

Formula negate(const Formula& f)
{
    // not(and_i or_j l_ij) = or_i and_j not(l_ij)
    Formula result = Formula::falsity();
    for (const auto& clause : f.clauses()) {
        Formula term;
        for (const auto& l : clause)
            term = conjoin(term, Formula::folded(negate(l)));
        result = disjoin(result, term);
    }
    return result;
}

Formula conjoin_all(const std::vector<Formula>& fs)
{
    Formula r;
    for (const auto& f : fs)
        r = conjoin(r, f);
    return r;
}

Formula disjoin_all(const std::vector<Formula>& fs)
{
    Formula r = Formula::falsity();
    for (const auto& f : fs)
        r = disjoin(r, f);
    return r;
}

Formula canonicalize(const Formula& f)
{
    std::vector<Clause> cs;
    for (const auto& c : f.clauses()) {
        Clause out;
        bool satisfied = false;
        for (const auto& l : c) {
            auto folded = normalize(l.atom.poly, l.atom.relation, l.negated);
            if (const bool* b = std::get_if<bool>(&folded)) {
                satisfied = satisfied || *b;
            } else {
                out.push_back(std::get<Literal>(folded));
            }
        }
        if (!satisfied)
            cs.push_back(std::move(out));
    }
    return Formula::from_clauses(std::move(cs));
}

Formula substitute(const Formula& f, const std::string& var, const IntExpr& e)
{
    const Polynomial replacement = Polynomial::from_expr(e);
    std::vector<Clause> cs;
    cs.reserve(f.clauses().size());
    for (const auto& c : f.clauses()) {
        Clause out;
        bool satisfied = false;
        for (const auto& l : c) {
            if (!l.atom.poly.mentions(var)) {
                out.push_back(l);
                continue;
            }
            auto folded = normalize(l.atom.poly.substitute(var, replacement), l.atom.relation, l.negated);
            if (const bool* b = std::get_if<bool>(&folded))
                satisfied = satisfied || *b;
            else
                out.push_back(std::get<Literal>(folded));
        }
        if (!satisfied)
            cs.push_back(std::move(out));
    }
    return Formula::from_clauses(std::move(cs));
}

bool evaluate(const Formula& f, const Valuation& v)
{
    return std::all_of(f.clauses().begin(), f.clauses().end(), [&](const Clause& c) {
        return std::any_of(c.begin(), c.end(), [&](const Literal& l) { return evaluate(l, v); });
    });
}

std::set<std::string> free_variables(const Formula& f)
{
    std::set<std::string> out;
    for (const auto& c : f.clauses())
        for (const auto& l : c)
            l.atom.poly.collect_variables(out);
    return out;
}

bool is_linear(const Formula& f)
{
    for (const auto& c : f.clauses())
        for (const auto& l : c)
            if (!l.atom.poly.is_linear())
                return false;
    return true;
}

} // namespace weaver
