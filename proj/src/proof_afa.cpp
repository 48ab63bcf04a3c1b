#include "weaver/proof_afa.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>
#include <utility>

namespace weaver {

Word ProofAfa::rmap_word(StateId s) const
{
    Word w;
    for (std::size_t i = 0; i < rmap[s]; ++i)
        w.push_back(sigma[i].label);
    return w;
}

bool ProofAfa::hmap_complete() const
{
    return std::all_of(hmap.begin(), hmap.end(), [](const auto& h) { return h.has_value(); });
}

namespace {

std::vector<Formula> split(const Formula& f)
{
    std::vector<Formula> parts;
    if (f.is_conjunction()) {
        for (const auto& c : f.clauses())
            parts.push_back(Formula::from_clauses({c}));
    } else {
        for (const auto& l : f.clauses().front())
            parts.push_back(Formula::literal(l));
    }
    std::stable_sort(parts.begin(), parts.end(),
                     [](const Formula& a, const Formula& b) { return a.to_string() < b.to_string(); });
    return parts;
}

Formula wp_letter(const Operation& op, const Formula& f)
{
    return wp_trace(std::span<const Operation>(&op, 1), f);
}

class Builder {
public:
    Builder(ProofAfa& p, Oracle& oracle) : p_(p), equivalent_(oracle.equivalence_check()) {}

    void run()
    {
        std::deque<StateId> queue;
        for (StateId s : make(p_.phi, p_.sigma.size()))
            queue.push_back(s);
        while (!queue.empty()) {
            const StateId s = queue.front();
            queue.pop_front();
            expand(s, queue);
        }
    }

private:
    bool stable(StateId s, std::size_t letter)
    {
        auto& memo = stable_[s];
        if (memo[letter] < 0) {
            const Operation& op = p_.ops[letter];
            memo[letter] = is_stable(std::span<const Operation>(&op, 1), p_.amap[s], equivalent_) ? 1 : 0;
        }
        return memo[letter] == 1;
    }

    /// Creates (or finds) the state for (f, len); returns the new states that
    /// still need letter transitions, in processing order.
    std::vector<StateId> make(const Formula& f, std::size_t len, StateId* id = nullptr)
    {
        const auto key = std::make_pair(f.to_string(), len);
        if (auto it = index_.find(key); it != index_.end()) {
            if (id)
                *id = it->second;
            return {};
        }
        const StateId s = p_.afa.add_state("s" + std::to_string(p_.afa.size()), false, f.is_compound());
        index_.emplace(key, s);
        if (id)
            *id = s;
        p_.amap.push_back(f);
        p_.rmap.push_back(len);
        p_.hmap.emplace_back();
        p_.children.emplace_back();
        p_.successor.emplace_back();
        stable_.emplace_back(p_.ops.size(), static_cast<signed char>(-1));

        bool accepting = true;
        for (std::size_t i = 0; i < len && accepting; ++i)
            accepting = stable(s, letters_of_sigma()[i]);
        p_.afa.accepting[s] = accepting;

        if (!f.is_compound() || accepting)
            return {s};

        std::vector<std::vector<StateId>> pending;
        std::vector<PosBool> leaves;
        for (const auto& part : split(f)) {
            StateId child = 0;
            pending.push_back(make(part, len, &child));
            p_.children[s].push_back(child);
            leaves.push_back(PosBool::leaf(child));
        }
        p_.afa.epsilon[s] = PosBool::conj(std::move(leaves));
        if (f.is_disjunction())
            std::reverse(pending.begin(), pending.end());
        std::vector<StateId> out;
        for (auto& group : pending)
            out.insert(out.end(), group.begin(), group.end());
        return out;
    }

    void expand(StateId s, std::deque<StateId>& queue)
    {
        for (std::size_t l = 0; l < p_.ops.size(); ++l)
            if (stable(s, l))
                p_.afa.add_transition(s, l, PosBool::leaf(s));
        if (p_.afa.accepting[s])
            return;
        std::size_t k = p_.rmap[s];
        while (k > 0 && stable(s, letters_of_sigma()[k - 1]))
            --k;
        if (k == 0)
            throw std::logic_error("non-accepting state with a stable prefix");
        const std::size_t letter = letters_of_sigma()[k - 1];
        StateId next = 0;
        for (StateId t : make(wp_letter(p_.sigma[k - 1], p_.amap[s]), k - 1, &next))
            queue.push_back(t);
        p_.successor[s] = next;
        p_.afa.add_transition(s, letter, PosBool::leaf(next));
    }

    const std::vector<std::size_t>& letters_of_sigma()
    {
        if (sigma_letters_.size() != p_.sigma.size()) {
            sigma_letters_.clear();
            for (const auto& op : p_.sigma)
                sigma_letters_.push_back(p_.afa.letter(op.label));
        }
        return sigma_letters_;
    }

    ProofAfa& p_;
    EquivalenceCheck equivalent_;
    std::map<std::pair<std::string, std::size_t>, StateId> index_;
    std::vector<std::vector<signed char>> stable_;
    std::vector<std::size_t> sigma_letters_;
};

Formula hmap_of(ProofAfa& p, StateId s)
{
    if (p.hmap[s])
        return *p.hmap[s];
    Formula h;
    if (p.afa.accepting[s]) {
        h = p.amap[s];
    } else if (!p.children[s].empty()) {
        std::vector<Formula> parts;
        for (StateId c : p.children[s])
            parts.push_back(hmap_of(p, c));
        h = p.amap[s].is_conjunction() ? conjoin_all(parts) : disjoin_all(parts);
    } else if (p.successor[s]) {
        h = hmap_of(p, *p.successor[s]);
    } else {
        throw std::logic_error("state s" + std::to_string(s) + " has no successor");
    }
    p.hmap[s] = h;
    return h;
}

} // namespace

ProofAfa build_proof_afa(const Trace& sigma, const Formula& phi, const std::vector<Operation>& alphabet,
                         Oracle& oracle)
{
    ProofAfa p;
    std::vector<std::string> letters;
    for (const auto& op : alphabet)
        letters.push_back(op.label);
    p.afa = Afa(letters);
    p.ops = alphabet;
    p.sigma = sigma;
    p.phi = phi;
    for (const auto& op : sigma)
        if (std::find(letters.begin(), letters.end(), op.label) == letters.end())
            throw std::invalid_argument("trace label not in alphabet: " + op.label);
    Builder(p, oracle).run();
    p.afa.initial = PosBool::leaf(0);
    p.built_states = p.size();
    return p;
}

ProofAfa compute_hmap(ProofAfa p, Oracle&)
{
    for (StateId s = 0; s < p.size(); ++s)
        hmap_of(p, s);
    return p;
}

ProofAfa slice_conjunctions(ProofAfa p, const Formula& context, Oracle& oracle)
{
    if (!p.hmap_complete())
        p = compute_hmap(std::move(p), oracle);
    if (oracle.is_sat(conjoin(context, *p.hmap[0])))
        return p;
    auto recompute = [&](ProofAfa& q) {
        for (auto& h : q.hmap)
            h.reset();
        for (StateId s = 0; s < q.size(); ++s)
            hmap_of(q, s);
    };
    for (StateId s = 0; s < p.built_states; ++s) {
        if (!p.afa.universal[s] || !p.amap[s].is_conjunction())
            continue;
        for (std::size_t i = p.children[s].size(); i-- > 0 && p.children[s].size() > 1;) {
            ProofAfa trial = p;
            trial.children[s].erase(trial.children[s].begin() + static_cast<long>(i));
            recompute(trial);
            if (oracle.is_sat(conjoin(context, *trial.hmap[0])))
                continue;
            std::vector<PosBool> leaves;
            for (StateId c : trial.children[s])
                leaves.push_back(PosBool::leaf(c));
            trial.afa.epsilon[s] = PosBool::conj(std::move(leaves));
            trial.sliced.push_back(s);
            p = std::move(trial);
        }
    }
    std::sort(p.sliced.begin(), p.sliced.end());
    p.sliced.erase(std::unique(p.sliced.begin(), p.sliced.end()), p.sliced.end());
    return p;
}

ProofAfa generalize_universal(ProofAfa p, Oracle& oracle)
{
    if (!p.hmap_complete())
        p = compute_hmap(std::move(p), oracle);
    const std::size_t original = p.built_states;
    for (StateId s = 0; s < original; ++s) {
        if (!p.afa.universal[s] || p.children[s].empty() || !p.amap[s].is_conjunction())
            continue;
        if (oracle.is_sat(*p.hmap[s]))
            continue;
        std::vector<Formula> hs;
        for (StateId c : p.children[s])
            hs.push_back(*p.hmap[c]);
        const UnsatCoreSet cores = oracle.minimal_unsat_cores(hs);
        if (cores.cores.empty())
            continue;
        p.cores_truncated = p.cores_truncated || cores.truncated;
        std::vector<PosBool> fresh;
        for (const auto& core : cores.cores) {
            std::vector<Formula> as, hcore;
            std::vector<PosBool> leaves;
            std::vector<StateId> members;
            for (std::size_t i : core) {
                const StateId c = p.children[s][i];
                as.push_back(p.amap[c]);
                hcore.push_back(*p.hmap[c]);
                leaves.push_back(PosBool::leaf(c));
                members.push_back(c);
            }
            const StateId u = p.afa.add_state("s" + std::to_string(s) + "u" + std::to_string(fresh.size()), false, true);
            p.afa.epsilon[u] = PosBool::conj(std::move(leaves));
            p.amap.push_back(conjoin_all(as));
            p.rmap.push_back(p.rmap[s]);
            p.hmap.emplace_back(conjoin_all(hcore));
            p.children.push_back(std::move(members));
            p.successor.emplace_back();
            fresh.push_back(PosBool::leaf(u));
        }
        p.afa.epsilon[s] = PosBool::disj(std::move(fresh));
        p.afa.universal[s] = false;
        p.converted.push_back(s);
    }
    return p;
}

ProofAfa add_edges(ProofAfa p, Oracle& oracle, bool equivalence_rule)
{
    if (!p.hmap_complete())
        p = compute_hmap(std::move(p), oracle);
    std::vector<StateId> unsat, valid;
    std::vector<std::vector<StateId>> classes;
    for (StateId s = 0; s < p.built_states; ++s) {
        if (p.amap[s].is_compound())
            continue;
        const Formula& h = *p.hmap[s];
        if (!oracle.is_sat(h)) {
            unsat.push_back(s);
        } else if (oracle.is_valid(h)) {
            valid.push_back(s);
        } else if (equivalence_rule) {
            auto same = std::find_if(classes.begin(), classes.end(),
                                     [&](const auto& c) { return oracle.equivalent(*p.hmap[c.front()], h); });
            if (same == classes.end())
                classes.push_back({s});
            else
                same->push_back(s);
        }
    }
    const std::size_t epsilon = p.ops.size();
    auto connect = [&](StateId s, std::size_t letter, StateId t) {
        const PosBool& before = letter == epsilon ? p.afa.epsilon[s] : p.afa.delta[s][letter];
        const PosBool after = PosBool::disj({before, PosBool::leaf(t)});
        if (after == before)
            return;
        if (letter == epsilon)
            p.afa.epsilon[s] = after;
        else
            p.afa.delta[s][letter] = after;
        ++p.edges_added;
    };
    for (const bool rule_unsat : {true, false}) {
        const auto& group = rule_unsat ? unsat : valid;
        for (StateId s : group) {
            if (p.amap[s].is_false())
                continue;
            for (std::size_t l = 0; l <= epsilon; ++l) {
                const Formula pre = l == epsilon ? p.amap[s] : wp_letter(p.ops[l], p.amap[s]);
                for (StateId t : group) {
                    if (l == epsilon && t == s)
                        continue;
                    const bool ok = rule_unsat ? oracle.implies(pre, p.amap[t]) : oracle.implies(p.amap[t], pre);
                    if (ok)
                        connect(s, l, t);
                }
            }
        }
    }
    for (const auto& group : classes) {
        if (group.size() < 2)
            continue;
        for (StateId s : group) {
            if (p.amap[s].is_false())
                continue;
            for (std::size_t l = 0; l <= epsilon; ++l) {
                const Formula pre = l == epsilon ? p.amap[s] : wp_letter(p.ops[l], p.amap[s]);
                for (StateId t : group)
                    if ((l != epsilon || t != s) && oracle.equivalent(pre, p.amap[t]))
                        connect(s, l, t);
            }
        }
    }
    return p;
}

std::string to_dot(const ProofAfa& p, const std::string& title)
{
    Afa a = p.afa;
    std::vector<std::string> notes;
    for (StateId s = 0; s < p.size(); ++s) {
        a.names[s] = "s" + std::to_string(s) + ": " + p.amap[s].to_string();
        std::string word;
        for (const auto& l : p.rmap_word(s))
            word += l;
        std::string note = "R: " + (word.empty() ? std::string("ε") : word);
        if (p.hmap[s])
            note += "\nH: " + p.hmap[s]->to_string();
        notes.push_back(std::move(note));
    }
    return to_dot(a, title, notes);
}

nlohmann::json to_json(const ProofAfa& p)
{
    nlohmann::json j = to_json(p.afa);
    for (StateId s = 0; s < p.size(); ++s) {
        auto& st = j["states"][s];
        st["amap"] = p.amap[s].to_string();
        st["rmap"] = p.rmap_word(s);
        if (p.hmap[s])
            st["hmap"] = p.hmap[s]->to_string();
    }
    std::vector<std::string> trace;
    for (const auto& op : p.sigma)
        trace.push_back(op.label);
    j["sigma"] = trace;
    j["phi"] = p.phi.to_string();
    j["converted"] = p.converted;
    j["sliced"] = p.sliced;
    j["edges_added"] = p.edges_added;
    return j;
}

} // namespace weaver
