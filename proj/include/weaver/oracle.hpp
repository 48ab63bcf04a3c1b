#ifndef WEAVER_ORACLE_HPP
#define WEAVER_ORACLE_HPP

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "weaver/formula.hpp"
#include "weaver/operation.hpp"

namespace weaver {

/// Declared finite domain of every program variable.
using DomainMap = std::map<std::string, std::vector<Int>>;

struct OracleConfig {
    enum class Mode { FiniteDomain, ExternalSmt };

    Mode mode = Mode::FiniteDomain;
    std::size_t enumeration_cap = 1'000'000;
    std::string solver_command = "z3 -in";
    unsigned timeout_ms = 10'000;
    std::size_t max_cores = 32;
    /// Subset checks allowed in the size-ordered core search before falling back to shrinking.
    std::size_t core_check_budget = 4096;
};

struct UnsatCoreSet {
    std::vector<std::vector<std::size_t>> cores;
    bool truncated = false;
};

struct OracleStats {
    std::size_t queries = 0;
    std::size_t cache_hits = 0;
    std::size_t assignments_enumerated = 0;
    std::size_t solver_calls = 0;
};

/**
 * Satisfiability, validity and implication over the declared domains
 * (finite-domain mode) or over unbounded integers via an external SMT-LIB2
 * solver. Verdicts are memoized on the canonical formula text. Safe to use
 * from several threads.
 */
class Oracle {
public:
    explicit Oracle(DomainMap domains, OracleConfig config = {});

    bool is_sat(const Formula& f);
    bool is_valid(const Formula& f);
    bool implies(const Formula& f, const Formula& g);
    bool equivalent(const Formula& f, const Formula& g);

    /// All minimal unsatisfiable index subsets of `fs`, smallest first.
    UnsatCoreSet minimal_unsat_cores(const std::vector<Formula>& fs);

    /// A satisfying assignment of `f` over its free variables (finite-domain mode only).
    std::optional<Valuation> witness(const Formula& f);

    EquivalenceCheck equivalence_check();

    const DomainMap& domains() const { return domains_; }
    const OracleConfig& config() const { return config_; }
    OracleStats stats() const;
    void clear_cache();

private:
    enum class Query : char { Sat = 's', Falsifiable = 'v', ImpliesFails = 'i', Differs = 'e' };

    bool ask(Query q, const Formula& f, const Formula& g);
    std::optional<Valuation> enumerate(Query q, const Formula& f, const Formula& g);
    bool solve_external(Query q, const Formula& f, const Formula& g);

    DomainMap domains_;
    OracleConfig config_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, bool> cache_;
    OracleStats stats_;
};

/// Runs `command` through /bin/sh, feeds `input` on stdin and returns stdout.
/// Throws SolverFailure on spawn errors, timeouts and abnormal exits.
std::string run_solver(const std::string& command, const std::string& input, unsigned timeout_ms);

} // namespace weaver

#endif
