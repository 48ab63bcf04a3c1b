#include "weaver/automata.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <unordered_map>

#include "weaver/errors.hpp"

namespace weaver {

// ---------------------------------------------------------------------------
// PosBool

PosBool PosBool::truth()
{
    PosBool p;
    p.kind_ = Kind::True;
    return p;
}

PosBool PosBool::leaf(StateId s)
{
    PosBool p;
    p.kind_ = Kind::Leaf;
    p.state_ = s;
    return p;
}

PosBool PosBool::conj(std::vector<PosBool> parts) { return combine(Kind::And, std::move(parts)); }
PosBool PosBool::disj(std::vector<PosBool> parts) { return combine(Kind::Or, std::move(parts)); }

PosBool PosBool::combine(Kind kind, std::vector<PosBool> parts)
{
    const Kind unit = kind == Kind::And ? Kind::True : Kind::False;
    const Kind zero = kind == Kind::And ? Kind::False : Kind::True;
    std::vector<PosBool> flat;
    flat.reserve(parts.size());
    for (auto& p : parts) {
        if (p.kind_ == zero)
            return p;
        if (p.kind_ == unit)
            continue;
        if (p.kind_ == kind) {
            for (auto& c : p.children_)
                flat.push_back(std::move(c));
        } else {
            flat.push_back(std::move(p));
        }
    }
    std::sort(flat.begin(), flat.end());
    flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
    if (flat.empty()) {
        PosBool p;
        p.kind_ = unit;
        return p;
    }
    if (flat.size() == 1)
        return std::move(flat.front());
    PosBool p;
    p.kind_ = kind;
    p.children_ = std::move(flat);
    return p;
}

int compare(const PosBool& a, const PosBool& b)
{
    if (a.kind_ != b.kind_)
        return a.kind_ < b.kind_ ? -1 : 1;
    if (a.kind_ == PosBool::Kind::Leaf)
        return a.state_ == b.state_ ? 0 : (a.state_ < b.state_ ? -1 : 1);
    const std::size_t n = std::min(a.children_.size(), b.children_.size());
    for (std::size_t i = 0; i < n; ++i)
        if (int c = compare(a.children_[i], b.children_[i]))
            return c;
    if (a.children_.size() != b.children_.size())
        return a.children_.size() < b.children_.size() ? -1 : 1;
    return 0;
}

bool PosBool::evaluate(const std::function<bool(StateId)>& leaf_value) const
{
    switch (kind_) {
    case Kind::False: return false;
    case Kind::True: return true;
    case Kind::Leaf: return leaf_value(state_);
    case Kind::And:
        return std::all_of(children_.begin(), children_.end(), [&](const PosBool& c) { return c.evaluate(leaf_value); });
    case Kind::Or:
        return std::any_of(children_.begin(), children_.end(), [&](const PosBool& c) { return c.evaluate(leaf_value); });
    }
    return false;
}

void PosBool::collect_leaves(std::set<StateId>& out) const
{
    if (kind_ == Kind::Leaf)
        out.insert(state_);
    for (const auto& c : children_)
        c.collect_leaves(out);
}

PosBool PosBool::dual() const
{
    switch (kind_) {
    case Kind::False: return truth();
    case Kind::True: return falsity();
    case Kind::Leaf: return *this;
    default: break;
    }
    std::vector<PosBool> parts;
    parts.reserve(children_.size());
    for (const auto& c : children_)
        parts.push_back(c.dual());
    return kind_ == Kind::And ? disj(std::move(parts)) : conj(std::move(parts));
}

PosBool PosBool::substitute(const std::function<PosBool(StateId)>& f) const
{
    switch (kind_) {
    case Kind::False:
    case Kind::True: return *this;
    case Kind::Leaf: return f(state_);
    default: break;
    }
    std::vector<PosBool> parts;
    parts.reserve(children_.size());
    for (const auto& c : children_)
        parts.push_back(c.substitute(f));
    return combine(kind_, std::move(parts));
}

PosBool PosBool::shifted(StateId offset) const
{
    if (offset == 0)
        return *this;
    PosBool p = *this;
    if (p.kind_ == Kind::Leaf)
        p.state_ += offset;
    for (auto& c : p.children_)
        c = c.shifted(offset);
    return p;
}

std::string PosBool::to_string() const
{
    switch (kind_) {
    case Kind::False: return "false";
    case Kind::True: return "true";
    case Kind::Leaf: return "s" + std::to_string(state_);
    default: break;
    }
    std::string s = "(";
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (i)
            s += kind_ == Kind::And ? " & " : " | ";
        s += children_[i].to_string();
    }
    return s + ")";
}

namespace {

bool subset_of(const StateSet& a, const StateSet& b)
{
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

/// Sorts and removes every set that contains another one.
void minimize(ModelSet& ms)
{
    std::sort(ms.begin(), ms.end(), [](const StateSet& a, const StateSet& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    ModelSet kept;
    for (auto& m : ms) {
        if (std::none_of(kept.begin(), kept.end(), [&](const StateSet& k) { return subset_of(k, m); }))
            kept.push_back(std::move(m));
    }
    std::sort(kept.begin(), kept.end());
    ms = std::move(kept);
}

ModelSet product(const ModelSet& a, const ModelSet& b)
{
    ModelSet out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a) {
        for (const auto& y : b) {
            StateSet u;
            u.reserve(x.size() + y.size());
            std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(u));
            out.push_back(std::move(u));
        }
    }
    minimize(out);
    return out;
}

ModelSet models_with(const PosBool& f, const std::function<const ModelSet&(StateId)>& leaf)
{
    switch (f.kind()) {
    case PosBool::Kind::False: return {};
    case PosBool::Kind::True: return {StateSet{}};
    case PosBool::Kind::Leaf: return leaf(f.state());
    case PosBool::Kind::And: {
        ModelSet acc = {StateSet{}};
        for (const auto& c : f.children()) {
            acc = product(acc, models_with(c, leaf));
            if (acc.empty())
                break;
        }
        return acc;
    }
    case PosBool::Kind::Or: {
        ModelSet acc;
        for (const auto& c : f.children()) {
            ModelSet part = models_with(c, leaf);
            acc.insert(acc.end(), part.begin(), part.end());
        }
        minimize(acc);
        return acc;
    }
    }
    return {};
}

} // namespace

ModelSet minimal_models(const PosBool& f)
{
    std::map<StateId, ModelSet> singletons;
    return models_with(f, [&](StateId s) -> const ModelSet& {
        auto [it, inserted] = singletons.try_emplace(s);
        if (inserted)
            it->second = {StateSet{s}};
        return it->second;
    });
}

// ---------------------------------------------------------------------------
// Afa / Nfa

StateId Afa::add_state(std::string name, bool is_accepting, bool is_universal)
{
    const StateId id = delta.size();
    delta.emplace_back(alphabet.size());
    epsilon.emplace_back();
    accepting.push_back(is_accepting);
    universal.push_back(is_universal);
    names.push_back(name.empty() ? "s" + std::to_string(id) : std::move(name));
    return id;
}

std::size_t Afa::letter(const std::string& label) const
{
    auto it = std::find(alphabet.begin(), alphabet.end(), label);
    if (it == alphabet.end())
        throw std::out_of_range("letter not in alphabet: " + label);
    return static_cast<std::size_t>(it - alphabet.begin());
}

void Afa::add_transition(StateId s, std::size_t a, const PosBool& f)
{
    delta[s][a] = PosBool::disj({delta[s][a], f});
}

void Afa::add_epsilon(StateId s, const PosBool& f) { epsilon[s] = PosBool::disj({epsilon[s], f}); }

bool Afa::has_epsilon() const
{
    return std::any_of(epsilon.begin(), epsilon.end(), [](const PosBool& e) { return !e.is_false(); });
}

StateId Nfa::add_state(bool is_accepting)
{
    successors.emplace_back(alphabet.size());
    accepting.push_back(is_accepting);
    return successors.size() - 1;
}

void Nfa::add_transition(StateId from, std::size_t letter, StateId to)
{
    auto& v = successors[from][letter];
    if (std::find(v.begin(), v.end(), to) == v.end())
        v.push_back(to);
}

Afa to_afa(const Nfa& n)
{
    Afa a(n.alphabet);
    for (StateId s = 0; s < n.size(); ++s)
        a.add_state({}, n.accepting[s]);
    for (StateId s = 0; s < n.size(); ++s) {
        for (std::size_t l = 0; l < n.alphabet.size(); ++l) {
            std::vector<PosBool> succ;
            for (StateId t : n.successors[s][l])
                succ.push_back(PosBool::leaf(t));
            a.delta[s][l] = PosBool::disj(std::move(succ));
        }
    }
    std::vector<PosBool> init;
    for (StateId s : n.initial)
        init.push_back(PosBool::leaf(s));
    a.initial = PosBool::disj(std::move(init));
    return a;
}

namespace {

std::vector<std::size_t> letters_of(const std::vector<std::string>& alphabet, const Word& w)
{
    std::vector<std::size_t> out;
    out.reserve(w.size());
    for (const auto& x : w) {
        auto it = std::find(alphabet.begin(), alphabet.end(), x);
        if (it == alphabet.end())
            throw std::out_of_range("letter not in alphabet: " + x);
        out.push_back(static_cast<std::size_t>(it - alphabet.begin()));
    }
    return out;
}

class Membership {
public:
    Membership(const Afa& a, const Word& w)
        : a_(a), w_(letters_of(a.alphabet, w)), budget_(a.has_epsilon() ? a.size() : 0) {}

    bool formula(const PosBool& f, std::size_t i, std::size_t b)
    {
        return f.evaluate([&](StateId s) { return state(s, i, b); });
    }

    bool state(StateId s, std::size_t i, std::size_t b)
    {
        const std::uint64_t key = (static_cast<std::uint64_t>(s) * (w_.size() + 1) + i) * (budget_ + 1) + b;
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        // cycles through the same key cannot occur: every step consumes a letter or budget
        bool r = (i == w_.size() && a_.accepting[s]);
        if (!r && i < w_.size())
            r = formula(a_.delta[s][w_[i]], i + 1, budget_);
        if (!r && b > 0 && !a_.epsilon[s].is_false())
            r = formula(a_.epsilon[s], i, b - 1);
        memo_.emplace(key, r);
        return r;
    }

    std::size_t budget() const { return budget_; }

private:
    const Afa& a_;
    std::vector<std::size_t> w_;
    std::size_t budget_;
    std::unordered_map<std::uint64_t, bool> memo_;
};

} // namespace

bool nfa_accepts(const Nfa& n, const Word& w)
{
    const auto letters = letters_of(n.alphabet, w);
    std::set<StateId> cur(n.initial.begin(), n.initial.end());
    for (std::size_t l : letters) {
        std::set<StateId> next;
        for (StateId s : cur)
            next.insert(n.successors[s][l].begin(), n.successors[s][l].end());
        cur = std::move(next);
    }
    return std::any_of(cur.begin(), cur.end(), [&](StateId s) { return n.accepting[s]; });
}

bool afa_accepts(const Afa& a, const Word& w)
{
    Membership m(a, w);
    return m.formula(a.initial, 0, m.budget());
}

bool afa_accepts_from(const Afa& a, StateId s, const Word& w)
{
    Membership m(a, w);
    return m.state(s, 0, m.budget());
}

// ---------------------------------------------------------------------------
// Transformations

Afa eliminate_epsilon(const Afa& a)
{
    if (!a.has_epsilon())
        return a;
    const std::size_t n = a.size();
    // closure[s]: minimal sets T such that s can epsilon-reach "all of T" by a finite tree
    std::vector<ModelSet> closure(n);
    for (StateId s = 0; s < n; ++s)
        closure[s] = {StateSet{s}};
    for (bool changed = true; changed;) {
        changed = false;
        for (StateId s = 0; s < n; ++s) {
            if (a.epsilon[s].is_false())
                continue;
            ModelSet next = models_with(a.epsilon[s], [&](StateId t) -> const ModelSet& { return closure[t]; });
            next.push_back({s});
            minimize(next);
            if (next != closure[s]) {
                closure[s] = std::move(next);
                changed = true;
            }
        }
    }

    Afa out = a;
    for (StateId s = 0; s < n; ++s) {
        out.epsilon[s] = PosBool::falsity();
        if (closure[s] == ModelSet{StateSet{s}})
            continue;
        out.accepting[s] = std::any_of(closure[s].begin(), closure[s].end(), [&](const StateSet& T) {
            return std::all_of(T.begin(), T.end(), [&](StateId t) { return a.accepting[t]; });
        });
        for (std::size_t l = 0; l < a.alphabet.size(); ++l) {
            std::vector<PosBool> terms;
            for (const auto& T : closure[s]) {
                std::vector<PosBool> parts;
                for (StateId t : T)
                    parts.push_back(a.delta[t][l]);
                terms.push_back(PosBool::conj(std::move(parts)));
            }
            out.delta[s][l] = PosBool::disj(std::move(terms));
        }
    }
    return out;
}

Afa complement(const Afa& a)
{
    if (a.has_epsilon())
        throw EpsilonPresent();
    Afa out = a;
    for (StateId s = 0; s < a.size(); ++s) {
        for (auto& f : out.delta[s])
            f = f.dual();
        out.accepting[s] = !a.accepting[s];
        out.universal[s] = !a.universal[s];
    }
    out.initial = a.initial.dual();
    return out;
}

Afa intersect(const Afa& a, const Afa& b)
{
    if (a.alphabet != b.alphabet)
        throw AlphabetMismatch();
    Afa out = a;
    const StateId offset = a.size();
    for (StateId s = 0; s < b.size(); ++s) {
        std::vector<PosBool> row;
        row.reserve(b.alphabet.size());
        for (const auto& f : b.delta[s])
            row.push_back(f.shifted(offset));
        out.delta.push_back(std::move(row));
        out.epsilon.push_back(b.epsilon[s].shifted(offset));
        out.accepting.push_back(b.accepting[s]);
        out.universal.push_back(b.universal[s]);
        out.names.push_back(b.names[s]);
    }
    out.initial = PosBool::conj({a.initial, b.initial.shifted(offset)});
    return out;
}

Afa trim(const Afa& a)
{
    std::vector<bool> reach(a.size(), false);
    std::vector<StateId> stack;
    auto visit = [&](const PosBool& f) {
        std::set<StateId> leaves;
        f.collect_leaves(leaves);
        for (StateId t : leaves) {
            if (!reach[t]) {
                reach[t] = true;
                stack.push_back(t);
            }
        }
    };
    visit(a.initial);
    while (!stack.empty()) {
        const StateId s = stack.back();
        stack.pop_back();
        for (const auto& f : a.delta[s])
            visit(f);
        visit(a.epsilon[s]);
    }
    std::vector<StateId> remap(a.size(), 0);
    Afa out(a.alphabet);
    for (StateId s = 0; s < a.size(); ++s)
        if (reach[s])
            remap[s] = out.add_state(a.names[s], a.accepting[s], a.universal[s]);
    auto rename = [&](StateId s) { return PosBool::leaf(remap[s]); };
    for (StateId s = 0; s < a.size(); ++s) {
        if (!reach[s])
            continue;
        for (std::size_t l = 0; l < a.alphabet.size(); ++l)
            out.delta[remap[s]][l] = a.delta[s][l].substitute(rename);
        out.epsilon[remap[s]] = a.epsilon[s].substitute(rename);
    }
    out.initial = a.initial.substitute(rename);
    return out;
}

// ---------------------------------------------------------------------------
// Subset construction

namespace {

class SubsetStepper {
public:
    SubsetStepper(const Afa& a, std::size_t cap) : a_(a), cap_(cap), cache_(a.size() * a.alphabet.size()) {}

    ModelSet step(const StateSet& q, std::size_t letter)
    {
        ModelSet acc = {StateSet{}};
        for (StateId s : q) {
            const ModelSet& next = models(s, letter);
            if (acc.size() * next.size() > cap_)
                throw CapExceeded("subset states", cap_);
            acc = product(acc, next);
            if (acc.empty())
                break;
        }
        return acc;
    }

    bool accepting(const StateSet& q) const
    {
        return std::all_of(q.begin(), q.end(), [&](StateId s) { return a_.accepting[s]; });
    }

private:
    const ModelSet& models(StateId s, std::size_t letter)
    {
        auto& slot = cache_[s * a_.alphabet.size() + letter];
        if (!slot)
            slot = minimal_models(a_.delta[s][letter]);
        return *slot;
    }

    const Afa& a_;
    std::size_t cap_;
    std::vector<std::optional<ModelSet>> cache_;
};

} // namespace

Nfa afa_to_nfa(const Afa& a, std::size_t cap)
{
    if (a.has_epsilon())
        throw EpsilonPresent();
    SubsetStepper stepper(a, cap);
    Nfa out(a.alphabet);
    std::map<StateSet, StateId> ids;
    std::deque<StateSet> queue;
    auto intern = [&](const StateSet& q) {
        auto [it, inserted] = ids.try_emplace(q, out.size());
        if (inserted) {
            if (ids.size() > cap)
                throw CapExceeded("subset states", cap);
            out.add_state(stepper.accepting(q));
            queue.push_back(q);
        }
        return it->second;
    };
    for (const auto& q : minimal_models(a.initial))
        out.initial.push_back(intern(q));
    while (!queue.empty()) {
        const StateSet q = std::move(queue.front());
        queue.pop_front();
        const StateId from = ids.at(q);
        for (std::size_t l = 0; l < a.alphabet.size(); ++l)
            for (const auto& next : stepper.step(q, l))
                out.add_transition(from, l, intern(next));
    }
    return out;
}

WordSearch shortest_word(const Afa& a, std::size_t cap)
{
    if (a.has_epsilon())
        throw EpsilonPresent();
    SubsetStepper stepper(a, cap);
    WordSearch result;

    struct Node {
        StateSet set;
        std::size_t parent;
        std::size_t letter;
    };
    std::vector<Node> nodes;
    std::vector<std::vector<std::size_t>> by_state(a.size());
    std::vector<std::size_t> empty_sets;

    auto covered = [&](const StateSet& q) {
        // some visited set is a subset of q: every word accepted from q is accepted from it
        if (!empty_sets.empty())
            return true;
        if (q.empty())
            return false;
        StateId best = q.front();
        for (StateId s : q)
            if (by_state[s].size() < by_state[best].size())
                best = s;
        for (std::size_t idx : by_state[best])
            if (subset_of(nodes[idx].set, q))
                return true;
        return false;
    };
    auto word_of = [&](std::size_t idx) {
        Word w;
        while (nodes[idx].parent != idx) {
            w.push_back(a.alphabet[nodes[idx].letter]);
            idx = nodes[idx].parent;
        }
        std::reverse(w.begin(), w.end());
        return w;
    };
    auto add = [&](StateSet q, std::size_t parent, std::size_t letter) -> std::optional<std::size_t> {
        if (covered(q))
            return std::nullopt;
        if (nodes.size() >= cap)
            throw CapExceeded("subset states", cap);
        const std::size_t idx = nodes.size();
        nodes.push_back({std::move(q), parent == SIZE_MAX ? idx : parent, letter});
        if (nodes[idx].set.empty())
            empty_sets.push_back(idx);
        for (StateId s : nodes[idx].set)
            by_state[s].push_back(idx);
        return idx;
    };

    std::deque<std::size_t> queue;
    for (auto& q : minimal_models(a.initial)) {
        if (auto idx = add(std::move(q), SIZE_MAX, 0)) {
            if (stepper.accepting(nodes[*idx].set)) {
                result.word = Word{};
                result.explored = nodes.size();
                return result;
            }
            queue.push_back(*idx);
        }
    }
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        for (std::size_t l = 0; l < a.alphabet.size(); ++l) {
            for (auto& next : stepper.step(nodes[cur].set, l)) {
                auto idx = add(std::move(next), cur, l);
                if (!idx)
                    continue;
                if (stepper.accepting(nodes[*idx].set)) {
                    result.word = word_of(*idx);
                    result.explored = nodes.size();
                    return result;
                }
                queue.push_back(*idx);
            }
        }
    }
    result.explored = nodes.size();
    return result;
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}

/// Emits edges for `f`, introducing junction nodes for nested connectives.
void emit_edges(std::ostringstream& os, const std::string& from, const PosBool& f, const std::string& label,
                std::size_t& junctions)
{
    switch (f.kind()) {
    case PosBool::Kind::False: return;
    case PosBool::Kind::True:
        os << "  " << from << " -> accept_all [label=\"" << escape(label) << "\"];\n";
        return;
    case PosBool::Kind::Leaf:
        os << "  " << from << " -> s" << f.state() << " [label=\"" << escape(label) << "\"];\n";
        return;
    case PosBool::Kind::Or:
        for (const auto& c : f.children())
            emit_edges(os, from, c, label, junctions);
        return;
    case PosBool::Kind::And: {
        const std::string j = "j" + std::to_string(junctions++);
        os << "  " << j << " [shape=diamond,label=\"&and;\",width=0.2,height=0.2];\n";
        os << "  " << from << " -> " << j << " [label=\"" << escape(label) << "\"];\n";
        for (const auto& c : f.children())
            emit_edges(os, j, c, "", junctions);
        return;
    }
    }
}

} // namespace

std::string to_dot(const Afa& a, const std::string& title, const std::vector<std::string>& notes)
{
    std::ostringstream os;
    std::size_t junctions = 0;
    os << "digraph \"" << escape(title) << "\" {\n  rankdir=LR;\n";
    os << "  init [shape=point];\n  accept_all [shape=plaintext,label=\"true\"];\n";
    for (StateId s = 0; s < a.size(); ++s) {
        os << "  s" << s << " [label=\"" << escape(a.names[s]) << (a.universal[s] ? " &forall;" : " &exist;")
           << "\", shape=" << (a.universal[s] ? "box" : "ellipse");
        if (a.universal[s])
            os << ", peripheries=" << (a.accepting[s] ? 3 : 2);
        else if (a.accepting[s])
            os << ", peripheries=2";
        if (s < notes.size() && !notes[s].empty())
            os << ", xlabel=\"" << escape(notes[s]) << "\"";
        os << "];\n";
    }
    emit_edges(os, "init", a.initial, "", junctions);
    for (StateId s = 0; s < a.size(); ++s) {
        for (std::size_t l = 0; l < a.alphabet.size(); ++l)
            emit_edges(os, "s" + std::to_string(s), a.delta[s][l], a.alphabet[l], junctions);
        emit_edges(os, "s" + std::to_string(s), a.epsilon[s], "&epsilon;", junctions);
    }
    os << "}\n";
    return os.str();
}

nlohmann::json to_json(const Afa& a)
{
    nlohmann::json j;
    j["alphabet"] = a.alphabet;
    j["initial"] = a.initial.to_string();
    nlohmann::json states = nlohmann::json::array();
    for (StateId s = 0; s < a.size(); ++s) {
        nlohmann::json st;
        st["id"] = s;
        st["name"] = a.names[s];
        st["accepting"] = static_cast<bool>(a.accepting[s]);
        st["universal"] = static_cast<bool>(a.universal[s]);
        nlohmann::json delta = nlohmann::json::object();
        for (std::size_t l = 0; l < a.alphabet.size(); ++l)
            if (!a.delta[s][l].is_false())
                delta[a.alphabet[l]] = a.delta[s][l].to_string();
        st["delta"] = delta;
        if (!a.epsilon[s].is_false())
            st["epsilon"] = a.epsilon[s].to_string();
        states.push_back(st);
    }
    j["states"] = states;
    return j;
}

} // namespace weaver
