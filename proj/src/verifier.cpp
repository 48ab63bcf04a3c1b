#include "weaver/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <sstream>

#include "weaver/errors.hpp"

namespace weaver {

std::string to_string(Outcome o)
{
    switch (o) {
    case Outcome::Safe: return "SAFE";
    case Outcome::Unsafe: return "UNSAFE";
    case Outcome::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

nlohmann::json to_json(const Verdict& v)
{
    nlohmann::json j;
    j["outcome"] = to_string(v.outcome);
    j["iterations"] = v.iterations;
    j["product_states"] = v.product_states;
    j["subsets_explored"] = v.subsets_explored;
    j["seconds"] = v.seconds;
    if (!v.reason.empty())
        j["reason"] = v.reason;
    if (v.counterexample) {
        j["counterexample"]["trace"] = v.counterexample->trace;
        j["counterexample"]["violated"] = v.counterexample->violated.to_string();
        j["counterexample"]["valuation"] = v.counterexample->final_valuation;
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& a : v.assertions) {
        groups.push_back({{"assertion", a.assertion.to_string()},
                          {"iterations", a.iterations},
                          {"proof_states", a.proof_states},
                          {"edges_added", a.edges_added},
                          {"remaining_states", a.remaining_states},
                          {"cores_truncated", a.cores_truncated}});
    }
    j["assertions"] = groups;
    j["oracle"] = {{"queries", v.oracle.queries},
                   {"cache_hits", v.oracle.cache_hits},
                   {"assignments_enumerated", v.oracle.assignments_enumerated},
                   {"solver_calls", v.oracle.solver_calls}};
    return j;
}

ProofStages prove_trace(const Program& p, const Trace& sigma, const Formula& psi, Oracle& oracle)
{
    ProofStages st;
    st.built = build_proof_afa(sigma, negate(psi), p.alphabet(), oracle);
    st.annotated = compute_hmap(st.built, oracle);
    if (oracle.is_sat(conjoin(p.initial_formula(), *st.annotated.hmap[0]))) {
        st.refuted = true;
        return st;
    }
    st.sliced = slice_conjunctions(st.annotated, p.initial_formula(), oracle);
    st.split = generalize_universal(st.sliced, oracle);
    st.widened = add_edges(st.split, oracle);
    st.epsilon_free = eliminate_epsilon(st.widened.afa);
    return st;
}

namespace {

Word reversed(Word w)
{
    std::reverse(w.begin(), w.end());
    return w;
}

bool ends_with_obligation(const ProductNfa& product, const Word& w, const Formula& psi)
{
    std::vector<StateId> current = product.nfa.initial;
    for (const auto& l : w) {
        const auto it = std::find(product.nfa.alphabet.begin(), product.nfa.alphabet.end(), l);
        if (it == product.nfa.alphabet.end())
            return false;
        const auto letter = static_cast<std::size_t>(it - product.nfa.alphabet.begin());
        std::vector<StateId> next;
        for (StateId s : current)
            for (StateId t : product.nfa.successors[s][letter])
                next.push_back(t);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        current = std::move(next);
    }
    return std::any_of(current.begin(), current.end(), [&](StateId s) {
        const auto& due = product.obligations[s];
        return std::find(due.begin(), due.end(), psi) != due.end();
    });
}

/// Shortlex comparison of words by letter position, then group index.
struct Candidate {
    Word word;
    std::vector<std::size_t> letters;
    std::size_t group = 0;

    bool operator<(const Candidate& o) const
    {
        if (letters.size() != o.letters.size())
            return letters.size() < o.letters.size();
        if (letters != o.letters)
            return letters < o.letters;
        return group < o.group;
    }
};

} // namespace

bool validate_counterexample(const Program& p, const ProductNfa& product, const Counterexample& cx)
{
    if (!ends_with_obligation(product, cx.trace, cx.violated))
        return false;
    const auto out = execute_trace(p, p.trace(cx.trace));
    const auto* done = std::get_if<Terminated>(&out);
    return done && !evaluate(cx.violated, done->valuation);
}

Verdict verify(const Program& p, const VerifyConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    Oracle oracle(p.domains(), cfg.oracle);
    auto finish = [&](Outcome o, std::string reason = {}) {
        v.outcome = o;
        v.reason = std::move(reason);
        v.oracle = oracle.stats();
        v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return v;
    };

    std::optional<ProductNfa> product;
    try {
        product = compose(p, cfg.product_cap);
    } catch (const CapExceeded& e) {
        return finish(Outcome::Unknown, e.what());
    }
    v.product_states = product->tuples.size();

    std::map<std::string, std::size_t> letter;
    for (std::size_t i = 0; i < p.labels.size(); ++i)
        letter[p.labels[i]] = i;

    std::vector<Formula> psis;
    std::vector<Afa> remaining;
    for (auto& g : reversed_remaining_languages(*product)) {
        psis.push_back(g.assertion);
        remaining.push_back(to_afa(g.reversed));
        v.assertions.push_back({g.assertion, 0, 0, 0, remaining.back().size(), false});
    }
    std::vector<std::optional<std::optional<Word>>> cached(remaining.size());

    try {
        while (true) {
            std::optional<Candidate> best;
            for (std::size_t g = 0; g < remaining.size(); ++g) {
                if (!cached[g]) {
                    const WordSearch found = shortest_word(remaining[g], cfg.subset_cap);
                    v.subsets_explored += found.explored;
                    cached[g] = found.word;
                }
                if (!*cached[g])
                    continue;
                Candidate c{**cached[g], {}, g};
                for (const auto& l : c.word)
                    c.letters.push_back(letter.at(l));
                if (!best || c < *best)
                    best = std::move(c);
            }
            if (!best)
                return finish(Outcome::Safe);
            if (v.iterations >= cfg.max_iterations)
                return finish(Outcome::Unknown, "iteration limit " + std::to_string(cfg.max_iterations) + " reached");
            ++v.iterations;

            const std::size_t g = best->group;
            const Word sigma = reversed(best->word);
            AssertionStats& stats = v.assertions[g];
            ++stats.iterations;
            const ProofStages st = prove_trace(p, p.trace(sigma), psis[g], oracle);
            stats.proof_states += st.built.size();
            if (st.refuted) {
                Counterexample cx{sigma, psis[g], {}};
                const auto out = execute_trace(p, p.trace(sigma));
                if (const auto* done = std::get_if<Terminated>(&out))
                    cx.final_valuation = done->valuation;
                v.counterexample = cx;
                if (validate_counterexample(p, *product, cx))
                    return finish(Outcome::Unsafe);
                return finish(Outcome::Unknown, "counterexample failed validation");
            }
            stats.edges_added += st.widened.edges_added;
            stats.cores_truncated = stats.cores_truncated || st.widened.cores_truncated;
            remaining[g] = trim(intersect(remaining[g], complement(st.epsilon_free)));
            stats.remaining_states = remaining[g].size();
            cached[g].reset();
            if (cfg.on_iteration)
                cfg.on_iteration({v.iterations, g, sigma, st.built.size(), remaining[g].size(), &st, &remaining[g]});
            if (afa_accepts(remaining[g], best->word))
                return finish(Outcome::Unknown, "proof does not cover its own trace");
        }
    } catch (const CapExceeded& e) {
        return finish(Outcome::Unknown, e.what());
    } catch (const SolverFailure& e) {
        return finish(Outcome::Unknown, e.what());
    }
}

Verdict brute_force_check(const Program& p, std::size_t product_cap)
{
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    auto finish = [&](Outcome o, std::string reason = {}) {
        v.outcome = o;
        v.reason = std::move(reason);
        v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return v;
    };
    std::optional<ProductNfa> product;
    try {
        product = compose(p, product_cap);
    } catch (const CapExceeded& e) {
        return finish(Outcome::Unknown, e.what());
    }
    v.product_states = product->tuples.size();

    struct Node {
        StateId state;
        Valuation valuation;
        std::size_t parent;
        std::size_t letter;
    };
    std::vector<Node> nodes;
    std::map<std::pair<StateId, Valuation>, std::size_t> seen;
    std::deque<std::size_t> queue;
    auto visit = [&](StateId s, Valuation val, std::size_t parent, std::size_t letter) {
        if (seen.try_emplace({s, val}, nodes.size()).second) {
            nodes.push_back({s, std::move(val), parent, letter});
            queue.push_back(nodes.size() - 1);
        }
    };
    const std::vector<Operation> ops = p.alphabet();
    for (StateId s : product->nfa.initial)
        visit(s, p.initial_valuation(), SIZE_MAX, 0);
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const StateId s = nodes[i].state;
        for (const auto& psi : product->obligations[s]) {
            if (evaluate(psi, nodes[i].valuation))
                continue;
            Word trace;
            for (std::size_t k = i; nodes[k].parent != SIZE_MAX; k = nodes[k].parent)
                trace.push_back(product->nfa.alphabet[nodes[k].letter]);
            v.counterexample = Counterexample{reversed(trace), psi, nodes[i].valuation};
            v.iterations = nodes.size();
            return finish(Outcome::Unsafe);
        }
        for (std::size_t l = 0; l < ops.size(); ++l) {
            for (StateId t : product->nfa.successors[s][l]) {
                Valuation next = nodes[i].valuation;
                if (execute(ops[l], next))
                    visit(t, std::move(next), i, l);
            }
        }
    }
    v.iterations = nodes.size();
    return finish(Outcome::Safe);
}

std::string random_program_text(std::mt19937& rng)
{
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    const std::vector<std::string> all_vars = {"x", "y"};
    const std::size_t nvars = 1 + pick(2);
    const std::vector<std::string> vars(all_vars.begin(), all_vars.begin() + static_cast<long>(nvars));
    auto var = [&] { return vars[pick(vars.size())]; };
    auto literal = [&] {
        const std::string a = var();
        switch (pick(3)) {
        case 0: return a + " = " + std::to_string(pick(2));
        case 1: return a + " != " + std::to_string(pick(2));
        default: return a + (pick(2) ? " = " : " != ") + var();
        }
    };
    auto operation = [&] {
        const std::string a = var();
        switch (pick(7)) {
        case 0:
        case 1: return a + " := " + std::to_string(pick(2));
        case 2: return a + " := " + var();
        case 3: return a + " := 1 - " + a;
        case 4: return "assume(" + literal() + ")";
        case 5: return "assume(" + literal() + " || " + literal() + ")";
        default: return pick(2) ? "lock(" + a + ")" : "unlock(" + a + ")";
        }
    };

    std::ostringstream os;
    for (const auto& x : vars)
        os << "shared " << x << " : {0,1} = " << pick(2) << ";\n";
    const char first_label[2] = {'a', 'p'};
    for (int proc = 0; proc < 2; ++proc) {
        const std::string prefix = proc == 0 ? "q" : "r";
        const std::size_t states = 2 + pick(3);
        char label = first_label[proc];
        os << "process P" << proc + 1 << " {\n  init " << prefix << "0;\n";
        for (std::size_t s = 0; s < states; ++s) {
            const std::size_t out = (s + 1 < states ? 1 : 0) + pick(2);
            for (std::size_t k = 0; k < out; ++k) {
                const std::size_t to = k == 0 && s + 1 < states ? s + 1 : pick(states);
                os << "  " << prefix << s << " -> " << prefix << to << " : " << label++ << " : " << operation()
                   << ";\n";
            }
        }
        if (pick(5) != 0)
            os << "  assert " << prefix << pick(states) << " : " << literal() << ";\n";
        os << "}\n";
    }
    return os.str();
}

} // namespace weaver
