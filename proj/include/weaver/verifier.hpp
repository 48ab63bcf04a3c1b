#ifndef WEAVER_VERIFIER_HPP
#define WEAVER_VERIFIER_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "weaver/oracle.hpp"
#include "weaver/program.hpp"
#include "weaver/proof_afa.hpp"

namespace weaver {

struct ProofStages;

struct IterationReport {
    std::size_t iteration = 0;
    std::size_t group = 0;
    Word trace;
    std::size_t proof_states = 0;
    std::size_t remaining_states = 0;
    /// Valid only during the callback.
    const ProofStages* stages = nullptr;
    /// Remaining automaton of `group` after this iteration; valid only during the callback.
    const Afa* remaining = nullptr;
};

struct VerifyConfig {
    OracleConfig oracle;
    std::size_t max_iterations = 10'000;
    std::size_t product_cap = 1'000'000;
    /// Bound on subset states explored per shortest-word search.
    std::size_t subset_cap = 1'000'000;
    std::function<void(const IterationReport&)> on_iteration;
};

enum class Outcome { Safe, Unsafe, Unknown };

std::string to_string(Outcome o);

struct Counterexample {
    Word trace;
    Formula violated;
    Valuation final_valuation;
};

struct AssertionStats {
    Formula assertion;
    std::size_t iterations = 0;
    std::size_t proof_states = 0;
    std::size_t edges_added = 0;
    std::size_t remaining_states = 0;
    bool cores_truncated = false;
};

struct Verdict {
    Outcome outcome = Outcome::Unknown;
    std::size_t iterations = 0;
    std::optional<Counterexample> counterexample;
    std::string reason;
    std::vector<AssertionStats> assertions;
    std::size_t product_states = 0;
    std::size_t subsets_explored = 0;
    OracleStats oracle;
    double seconds = 0;
};

nlohmann::json to_json(const Verdict& v);

/// Every stage of the proof pipeline for one trace.
struct ProofStages {
    ProofAfa built;
    ProofAfa annotated;
    ProofAfa sliced;
    ProofAfa split;
    ProofAfa widened;
    Afa epsilon_free;
    /// I ∧ HMap(s0) is satisfiable; the later stages are left empty.
    bool refuted = false;
};

/// Builds the proof for `sigma` against the negation of `psi`.
ProofStages prove_trace(const Program& p, const Trace& sigma, const Formula& psi, Oracle& oracle);

Verdict verify(const Program& p, const VerifyConfig& cfg = {});

/// The trace is a product path ending where `cx.violated` is due, and executing
/// it terminates in a state violating that assertion.
bool validate_counterexample(const Program& p, const ProductNfa& product, const Counterexample& cx);

/// Explicit-state search over (product state, valuation).
Verdict brute_force_check(const Program& p, std::size_t product_cap = 1'000'000);

/// Two processes, at most four states each, at most two shared variables over {0,1}
/// and at most one assertion per process.
std::string random_program_text(std::mt19937& rng);

} // namespace weaver

#endif
