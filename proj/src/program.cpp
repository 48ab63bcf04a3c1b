#include "weaver/program.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "syntax.hpp"
#include "weaver/errors.hpp"

namespace weaver {

// ---------------------------------------------------------------------------
// Program accessors

const Operation& Program::operation(const std::string& label) const
{
    for (const auto& proc : processes)
        for (const auto& t : proc.transitions)
            if (t.op.label == label)
                return t.op;
    throw SemanticError("unknown label " + label);
}

std::vector<Operation> Program::alphabet() const
{
    std::vector<Operation> ops;
    ops.reserve(labels.size());
    for (const auto& l : labels)
        ops.push_back(operation(l));
    return ops;
}

Trace Program::trace(const Word& word) const
{
    Trace t;
    t.reserve(word.size());
    for (const auto& l : word)
        t.push_back(operation(l));
    return t;
}

DomainMap Program::domains() const
{
    DomainMap d;
    for (const auto& v : variables)
        d[v.name] = v.domain;
    return d;
}

Valuation Program::initial_valuation() const
{
    Valuation v;
    for (const auto& var : variables)
        v[var.name] = var.initial;
    return v;
}

Formula Program::initial_formula() const
{
    Formula f;
    for (const auto& var : variables)
        f = conjoin(f, Formula::atom(IntExpr::variable(var.name), Cmp::Eq, IntExpr::constant(var.initial)));
    return f;
}

void Program::set_label_order(const std::vector<std::string>& order)
{
    std::vector<std::string> a = order;
    std::vector<std::string> b = labels;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
        throw SemanticError("label order must list every label exactly once");
    labels = order;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

using syntax::Token;
using syntax::TokenStream;

struct PendingLocal {
    std::string process;
    Variable var;
    std::size_t line;
};

Int parse_signed(TokenStream& ts)
{
    const bool neg = ts.accept("-");
    const Token& t = ts.peek();
    Int v = 0;
    if (t.kind == Token::Kind::Number) {
        v = std::stoll(t.text);
    } else if (t.text == "true" || t.text == "false") {
        v = t.text == "true" ? 1 : 0;
    } else {
        ts.fail("expected integer");
    }
    ts.next();
    return neg ? -v : v;
}

Variable parse_variable(TokenStream& ts)
{
    Variable v;
    v.name = ts.expect_identifier();
    ts.expect(":");
    ts.expect("{");
    do {
        v.domain.push_back(parse_signed(ts));
    } while (ts.accept(","));
    ts.expect("}");
    ts.expect("=");
    v.initial = parse_signed(ts);
    ts.expect(";");
    std::sort(v.domain.begin(), v.domain.end());
    v.domain.erase(std::unique(v.domain.begin(), v.domain.end()), v.domain.end());
    return v;
}

Operation parse_operation(TokenStream& ts, const std::string& label)
{
    if ((ts.check("assume") || ts.check("lock") || ts.check("unlock")) && ts.peek(1).text == "(") {
        const std::string kw = ts.next().text;
        ts.expect("(");
        Operation op;
        if (kw == "assume") {
            op = Operation::assume(label, syntax::parse_formula(ts));
        } else if (kw == "lock") {
            op = Operation::lock(label, ts.expect_identifier());
        } else {
            op = Operation::assign(label, ts.expect_identifier(), IntExpr::constant(0));
        }
        ts.expect(")");
        return op;
    }
    const std::string var = ts.expect_identifier();
    ts.expect(":=");
    return Operation::assign(label, var, syntax::parse_expr(ts));
}

class Checker {
public:
    explicit Checker(Program& p) : p_(p)
    {
        for (std::size_t i = 0; i < p_.variables.size(); ++i)
            index_[p_.variables[i].name] = i;
    }

    const Variable& lookup(const std::string& name, int process, const std::string& context) const
    {
        auto it = index_.find(name);
        if (it == index_.end())
            throw SemanticError("undeclared variable " + name + " in " + context);
        const Variable& v = p_.variables[it->second];
        if (v.owner != -1 && v.owner != process)
            throw SemanticError("variable " + name + " is local to another process (" + context + ")");
        return v;
    }

    void names(const std::set<std::string>& vars, int process, const std::string& context) const
    {
        for (const auto& n : vars)
            lookup(n, process, context);
    }

    /// Every value of `e` over the operands' domains must lie in the target's domain.
    void closed(const Variable& target, const IntExpr& e, int process, const std::string& context) const
    {
        std::set<std::string> vars;
        e.collect_variables(vars);
        std::vector<const Variable*> operands;
        for (const auto& n : vars)
            operands.push_back(&lookup(n, process, context));
        std::vector<std::size_t> idx(operands.size(), 0);
        Valuation v;
        for (std::size_t steps = 0;; ++steps) {
            if (steps > 1'000'000)
                throw SemanticError("domain check too large for " + context);
            for (std::size_t i = 0; i < operands.size(); ++i)
                v[operands[i]->name] = operands[i]->domain[idx[i]];
            const Int x = e.evaluate(v);
            if (!std::binary_search(target.domain.begin(), target.domain.end(), x))
                throw SemanticError(context + " can leave the domain of " + target.name + " (value " +
                                    std::to_string(x) + ")");
            std::size_t i = 0;
            for (; i < operands.size(); ++i) {
                if (++idx[i] < operands[i]->domain.size())
                    break;
                idx[i] = 0;
            }
            if (i == operands.size())
                return;
        }
    }

private:
    Program& p_;
    std::map<std::string, std::size_t> index_;
};

void check(Program& p)
{
    if (p.processes.empty())
        throw SemanticError("program has no processes");
    std::set<std::string> seen;
    for (const auto& v : p.variables) {
        if (!seen.insert(v.name).second)
            throw SemanticError("duplicate variable " + v.name);
        if (!std::binary_search(v.domain.begin(), v.domain.end(), v.initial))
            throw SemanticError("initial value of " + v.name + " is outside its domain");
    }
    std::set<std::string> process_names;
    for (const auto& proc : p.processes)
        if (!process_names.insert(proc.name).second)
            throw SemanticError("duplicate process " + proc.name);

    const Checker checker(p);
    std::map<std::string, std::pair<std::size_t, std::string>> label_owner;
    for (std::size_t pi = 0; pi < p.processes.size(); ++pi) {
        const auto& proc = p.processes[pi];
        const int owner = static_cast<int>(pi);
        std::set<std::pair<std::size_t, std::string>> outgoing;
        for (const auto& t : proc.transitions) {
            const Operation& op = t.op;
            const std::string ctx = "operation " + op.label;
            auto [it, fresh] = label_owner.try_emplace(op.label, pi, op.to_string());
            if (!fresh && (it->second.first != pi || it->second.second != op.to_string()))
                throw SemanticError("duplicate label " + op.label);
            if (!outgoing.insert({t.from, op.label}).second)
                throw SemanticError("process " + proc.name + " is nondeterministic on label " + op.label);
            switch (op.kind) {
            case Operation::Kind::Assign:
                checker.closed(checker.lookup(op.variable, owner, ctx), op.expr, owner, ctx);
                break;
            case Operation::Kind::Assume: checker.names(free_variables(op.guard), owner, ctx); break;
            case Operation::Kind::Lock: {
                const Variable& v = checker.lookup(op.variable, owner, ctx);
                if (!std::binary_search(v.domain.begin(), v.domain.end(), 0) ||
                    !std::binary_search(v.domain.begin(), v.domain.end(), 1))
                    throw SemanticError("lock variable " + v.name + " needs 0 and 1 in its domain");
                break;
            }
            default: break;
            }
        }
        for (const auto& [state, f] : proc.assertions)
            checker.names(free_variables(f), owner, "assertion at " + proc.states[state]);
    }
}

} // namespace

Program parse_program(const std::string& text)
{
    TokenStream ts(syntax::tokenize(text));
    Program p;
    std::vector<PendingLocal> locals;
    std::set<std::string> label_seen;

    while (!ts.at_end()) {
        if (ts.accept("shared")) {
            p.variables.push_back(parse_variable(ts));
        } else if (ts.check("local")) {
            const std::size_t line = ts.next().line;
            const std::string proc = ts.expect_identifier();
            locals.push_back({proc, parse_variable(ts), line});
        } else if (ts.accept("process")) {
            Process proc;
            proc.name = ts.expect_identifier();
            const int owner = static_cast<int>(p.processes.size());
            auto state_id = [&](const std::string& name) {
                auto it = std::find(proc.states.begin(), proc.states.end(), name);
                if (it != proc.states.end())
                    return static_cast<std::size_t>(it - proc.states.begin());
                proc.states.push_back(name);
                return proc.states.size() - 1;
            };
            bool has_init = false;
            ts.expect("{");
            while (!ts.accept("}")) {
                if (ts.check("init") && ts.peek(1).kind == Token::Kind::Identifier && ts.peek(2).text == ";") {
                    ts.next();
                    if (has_init)
                        ts.fail("second init");
                    proc.initial = state_id(ts.expect_identifier());
                    has_init = true;
                    ts.expect(";");
                } else if (ts.check("assert") && ts.peek(1).kind == Token::Kind::Identifier &&
                           ts.peek(2).text == ":") {
                    ts.next();
                    const std::size_t q = state_id(ts.expect_identifier());
                    ts.expect(":");
                    Formula f = syntax::parse_formula(ts);
                    ts.expect(";");
                    auto [it, fresh] = proc.assertions.try_emplace(q, f);
                    if (!fresh)
                        it->second = conjoin(it->second, f);
                } else {
                    const std::size_t from = state_id(ts.expect_identifier());
                    ts.expect("->");
                    const std::size_t to = state_id(ts.expect_identifier());
                    ts.expect(":");
                    const std::string label = ts.expect_identifier();
                    ts.expect(":");
                    Operation op = parse_operation(ts, label);
                    op.owner = owner;
                    ts.expect(";");
                    proc.transitions.push_back({from, std::move(op), to});
                    if (label_seen.insert(label).second)
                        p.labels.push_back(label);
                }
            }
            if (!has_init)
                throw SemanticError("process " + proc.name + " has no init state");
            p.processes.push_back(std::move(proc));
        } else {
            ts.fail("expected 'shared', 'local' or 'process'");
        }
    }
    for (auto& l : locals) {
        auto it = std::find_if(p.processes.begin(), p.processes.end(),
                               [&](const Process& pr) { return pr.name == l.process; });
        if (it == p.processes.end())
            throw SemanticError("local variable " + l.var.name + " names unknown process " + l.process);
        l.var.owner = static_cast<int>(it - p.processes.begin());
        p.variables.push_back(std::move(l.var));
    }
    check(p);
    return p;
}

// ---------------------------------------------------------------------------
// Product

ProductNfa compose(const Program& p, std::size_t cap)
{
    ProductNfa out;
    out.nfa = Nfa(p.labels);
    std::map<std::vector<std::size_t>, StateId> ids;
    std::deque<StateId> queue;

    auto intern = [&](std::vector<std::size_t> tuple) {
        auto [it, fresh] = ids.try_emplace(tuple, out.tuples.size());
        if (fresh) {
            if (ids.size() > cap)
                throw CapExceeded("product states", cap);
            std::optional<Formula> tag;
            std::vector<Formula> parts;
            for (std::size_t i = 0; i < tuple.size(); ++i) {
                auto a = p.processes[i].assertions.find(tuple[i]);
                if (a != p.processes[i].assertions.end()) {
                    tag = tag ? conjoin(*tag, a->second) : a->second;
                    parts.push_back(a->second);
                }
            }
            out.nfa.add_state(tag.has_value());
            out.assertion.push_back(std::move(tag));
            out.obligations.push_back(std::move(parts));
            out.tuples.push_back(std::move(tuple));
            queue.push_back(it->second);
        }
        return it->second;
    };

    std::vector<std::size_t> start;
    for (const auto& proc : p.processes)
        start.push_back(proc.initial);
    out.nfa.initial = {intern(start)};

    std::map<std::string, std::size_t> letter;
    for (std::size_t i = 0; i < p.labels.size(); ++i)
        letter[p.labels[i]] = i;

    while (!queue.empty()) {
        const StateId s = queue.front();
        queue.pop_front();
        for (std::size_t j = 0; j < p.processes.size(); ++j) {
            for (const auto& t : p.processes[j].transitions) {
                if (t.from != out.tuples[s][j])
                    continue;
                std::vector<std::size_t> next = out.tuples[s];
                next[j] = t.to;
                const StateId target = intern(std::move(next));
                out.nfa.add_transition(s, letter.at(t.op.label), target);
            }
        }
    }
    return out;
}

ExecutionOutcome execute_trace(const Program& p, const Trace& t)
{
    Valuation v = p.initial_valuation();
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!execute(t[i], v))
            return Blocked{i};
    return Terminated{std::move(v)};
}

std::vector<RemainingLanguage> reversed_remaining_languages(const ProductNfa& product)
{
    std::vector<RemainingLanguage> groups;
    std::vector<std::vector<StateId>> members;
    for (StateId s = 0; s < product.tuples.size(); ++s) {
        for (const auto& psi : product.obligations[s]) {
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const RemainingLanguage& g) { return g.assertion == psi; });
            if (it == groups.end()) {
                groups.push_back({psi, Nfa(product.nfa.alphabet)});
                members.emplace_back();
                it = groups.end() - 1;
            }
            auto& m = members[static_cast<std::size_t>(it - groups.begin())];
            if (m.empty() || m.back() != s)
                m.push_back(s);
        }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        Nfa& rev = groups[g].reversed;
        for (StateId s = 0; s < product.nfa.size(); ++s)
            rev.add_state(product.nfa.initial.front() == s);
        for (StateId s = 0; s < product.nfa.size(); ++s)
            for (std::size_t l = 0; l < product.nfa.alphabet.size(); ++l)
                for (StateId t : product.nfa.successors[s][l])
                    rev.add_transition(t, l, s);
        rev.initial = members[g];
    }
    return groups;
}

} // namespace weaver
