#include "weaver/operation.hpp"

namespace weaver {

Operation Operation::skip(std::string label)
{
    Operation op;
    op.label = std::move(label);
    return op;
}

Operation Operation::assign(std::string label, std::string var, IntExpr e)
{
    Operation op;
    op.kind = Kind::Assign;
    op.label = std::move(label);
    op.variable = std::move(var);
    op.expr = std::move(e);
    return op;
}

Operation Operation::assume(std::string label, Formula guard)
{
    Operation op;
    op.kind = Kind::Assume;
    op.label = std::move(label);
    op.guard = std::move(guard);
    return op;
}

Operation Operation::assertion(std::string label, Formula guard)
{
    Operation op = assume(std::move(label), std::move(guard));
    op.kind = Kind::Assert;
    return op;
}

Operation Operation::lock(std::string label, std::string var)
{
    Operation op;
    op.kind = Kind::Lock;
    op.label = std::move(label);
    op.variable = std::move(var);
    return op;
}

std::string Operation::to_string() const
{
    switch (kind) {
    case Kind::Skip: return "skip";
    case Kind::Assign: return variable + " := " + expr.to_string();
    case Kind::Assume: return "assume(" + guard.to_string() + ")";
    case Kind::Assert: return "assert(" + guard.to_string() + ")";
    case Kind::Lock: return "lock(" + variable + ")";
    }
    return {};
}

namespace {

Formula lock_free(const std::string& var)
{
    return Formula::atom(IntExpr::variable(var), Cmp::Eq, IntExpr::constant(0));
}

} // namespace

Formula wp(const Operation& op, const Formula& post)
{
    switch (op.kind) {
    case Operation::Kind::Skip: return post;
    case Operation::Kind::Assign: return substitute(post, op.variable, op.expr);
    case Operation::Kind::Assert: return conjoin(post, op.guard);
    case Operation::Kind::Assume: return disjoin(negate(op.guard), post);
    case Operation::Kind::Lock: {
        const Formula taken = substitute(post, op.variable, IntExpr::constant(1));
        return disjoin(negate(lock_free(op.variable)), taken);
    }
    }
    return post;
}

std::vector<Operation> assume_to_assert(const Operation& op)
{
    switch (op.kind) {
    case Operation::Kind::Assume: {
        Operation a = Operation::assertion(op.label, op.guard);
        a.owner = op.owner;
        return {a};
    }
    case Operation::Kind::Lock: {
        Operation check = Operation::assertion(op.label, lock_free(op.variable));
        Operation take = Operation::assign(op.label, op.variable, IntExpr::constant(1));
        check.owner = take.owner = op.owner;
        return {check, take};
    }
    default: return {op};
    }
}

Trace assume_to_assert(std::span<const Operation> ops)
{
    Trace out;
    for (const auto& op : ops) {
        auto part = assume_to_assert(op);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

Formula wp_trace(std::span<const Operation> ops, const Formula& post)
{
    Formula f = post;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const auto rewritten = assume_to_assert(*it);
        for (auto r = rewritten.rbegin(); r != rewritten.rend(); ++r)
            f = wp(*r, f);
    }
    return f;
}

bool is_stable(std::span<const Operation> ops, const Formula& f, const EquivalenceCheck& equivalent)
{
    if (f.is_false())
        return true;
    const Formula pre = wp_trace(ops, f);
    if (pre == f)
        return true;
    return equivalent && equivalent(pre, f);
}

bool execute(const Operation& op, Valuation& v)
{
    switch (op.kind) {
    case Operation::Kind::Skip: return true;
    case Operation::Kind::Assign: {
        const Int value = op.expr.evaluate(v);
        v[op.variable] = value;
        return true;
    }
    case Operation::Kind::Assume:
    case Operation::Kind::Assert: return evaluate(op.guard, v);
    case Operation::Kind::Lock: {
        auto it = v.find(op.variable);
        const Int current = it == v.end() ? throw std::out_of_range(op.variable) : it->second;
        if (current != 0)
            return false;
        it->second = 1;
        return true;
    }
    }
    return true;
}

} // namespace weaver
