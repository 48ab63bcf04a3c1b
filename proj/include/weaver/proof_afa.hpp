#ifndef WEAVER_PROOF_AFA_HPP
#define WEAVER_PROOF_AFA_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "weaver/automata.hpp"
#include "weaver/formula.hpp"
#include "weaver/operation.hpp"
#include "weaver/oracle.hpp"

namespace weaver {

/**
 * Annotated automaton built from a trace and a postcondition. It reads
 * traces backwards: the reverse of sigma is accepted from state 0.
 *
 * State 0 is the root. `rmap[s]` is the length of the prefix of `sigma`
 * still to be explained at `s`.
 */
struct ProofAfa {
    Afa afa;
    std::vector<Operation> ops; ///< one per letter of `afa.alphabet`
    Trace sigma;
    Formula phi;

    std::vector<Formula> amap;
    std::vector<std::size_t> rmap;
    std::vector<std::optional<Formula>> hmap;

    /// Compound-Assn children, empty for literal states.
    std::vector<std::vector<StateId>> children;
    /// Literal-Assn successor of a non-accepting literal state.
    std::vector<std::optional<StateId>> successor;
    /// States present after build; later states come from generalization.
    std::size_t built_states = 0;
    /// Universal states that lost children in slice_conjunctions.
    std::vector<StateId> sliced;
    /// Universal states turned existential by generalize_universal.
    std::vector<StateId> converted;

    bool cores_truncated = false;
    std::size_t edges_added = 0;

    std::size_t size() const { return afa.size(); }
    Word rmap_word(StateId s) const;
    bool hmap_complete() const;
};

/// Definition-1 construction. `alphabet` lists the letters; every op of `sigma`
/// must carry one of their labels.
ProofAfa build_proof_afa(const Trace& sigma, const Formula& phi, const std::vector<Operation>& alphabet,
                         Oracle& oracle);

ProofAfa compute_hmap(ProofAfa p, Oracle& oracle);

/// Drops children of universal conjunctive states while `context` ∧ HMap(s0)
/// stays unsatisfiable. Afterwards HMap(s) is implied by, rather than
/// equivalent to, wp(rev(w), AMap(s)) for the words w accepted from s.
ProofAfa slice_conjunctions(ProofAfa p, const Formula& context, Oracle& oracle);

/// Splits unsatisfiable conjunctive universal states by their minimal unsat cores.
ProofAfa generalize_universal(ProofAfa p, Oracle& oracle);

/// Rule-Unsat and Rule-Valid edges between built literal states. With
/// `equivalence_rule`, states whose HMaps are equivalent (and neither
/// unsatisfiable nor valid) are also linked by a letter `a` when
/// wp(a, AMap(s)) is equivalent to AMap(t).
ProofAfa add_edges(ProofAfa p, Oracle& oracle, bool equivalence_rule = true);

/// AMap inside each node, RMap and HMap beside it.
std::string to_dot(const ProofAfa& p, const std::string& title = "proof");
nlohmann::json to_json(const ProofAfa& p);

} // namespace weaver

#endif
