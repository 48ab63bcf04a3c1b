#include "weaver/oracle.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include "weaver/errors.hpp"

extern char** environ;

namespace weaver {

namespace {

/// Formula flattened onto variable slots for fast repeated evaluation.
class CompiledFormula {
public:
    CompiledFormula(const Formula& f, const std::map<std::string, std::size_t>& slots)
    {
        for (const auto& clause : f.clauses()) {
            std::vector<Lit> c;
            for (const auto& l : clause) {
                Lit lit;
                lit.eq = l.atom.relation == Atom::Relation::Eq;
                lit.negated = l.negated;
                for (const auto& [m, coef] : l.atom.poly.terms()) {
                    Term t{coef, {}};
                    for (const auto& name : m)
                        t.vars.push_back(slots.at(name));
                    lit.terms.push_back(std::move(t));
                }
                c.push_back(std::move(lit));
            }
            clauses_.push_back(std::move(c));
        }
    }

    bool operator()(const std::vector<Int>& values) const
    {
        for (const auto& c : clauses_) {
            bool any = false;
            for (const auto& l : c) {
                Int sum = 0;
                for (const auto& t : l.terms) {
                    Int x = t.coef;
                    for (std::size_t v : t.vars)
                        x *= values[v];
                    sum += x;
                }
                const bool holds = l.eq ? sum == 0 : sum <= 0;
                if (holds != l.negated) {
                    any = true;
                    break;
                }
            }
            if (!any)
                return false;
        }
        return true;
    }

private:
    struct Term {
        Int coef;
        std::vector<std::size_t> vars;
    };
    struct Lit {
        std::vector<Term> terms;
        bool eq = true;
        bool negated = false;
    };
    std::vector<std::vector<Lit>> clauses_;
};

std::string logic_for(const Formula& f, const Formula& g)
{
    return is_linear(f) && is_linear(g) ? "QF_LIA" : "QF_NIA";
}

} // namespace

Oracle::Oracle(DomainMap domains, OracleConfig config) : domains_(std::move(domains)), config_(std::move(config))
{
    if (config_.enumeration_cap < 1 || config_.timeout_ms < 1)
        throw std::invalid_argument("oracle caps must be positive");
    for (const auto& [name, dom] : domains_)
        if (dom.empty())
            throw std::invalid_argument("empty domain for " + name);
}

bool Oracle::is_sat(const Formula& f)
{
    if (f.is_true())
        return true;
    if (f.is_false())
        return false;
    return ask(Query::Sat, f, Formula());
}

bool Oracle::is_valid(const Formula& f)
{
    if (f.is_true())
        return true;
    if (f.is_false())
        return false;
    return !ask(Query::Falsifiable, f, Formula());
}

bool Oracle::implies(const Formula& f, const Formula& g)
{
    if (f.is_false() || g.is_true() || f == g)
        return true;
    return !ask(Query::ImpliesFails, f, g);
}

bool Oracle::equivalent(const Formula& f, const Formula& g)
{
    if (f == g)
        return true;
    return !ask(Query::Differs, f, g);
}

bool Oracle::ask(Query q, const Formula& f, const Formula& g)
{
    std::string key(1, static_cast<char>(q));
    key += f.to_string();
    key += '\x1f';
    key += g.to_string();
    {
        std::lock_guard lock(mutex_);
        ++stats_.queries;
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++stats_.cache_hits;
            return it->second;
        }
    }
    const bool answer = config_.mode == OracleConfig::Mode::FiniteDomain ? enumerate(q, f, g).has_value()
                                                                          : solve_external(q, f, g);
    std::lock_guard lock(mutex_);
    cache_.emplace(std::move(key), answer);
    return answer;
}

std::optional<Valuation> Oracle::enumerate(Query q, const Formula& f, const Formula& g)
{
    std::set<std::string> vars = free_variables(f);
    const std::set<std::string> more = free_variables(g);
    vars.insert(more.begin(), more.end());

    std::map<std::string, std::size_t> slots;
    std::vector<const std::vector<Int>*> doms;
    std::size_t total = 1;
    for (const auto& name : vars) {
        auto it = domains_.find(name);
        if (it == domains_.end())
            throw std::invalid_argument("no domain for variable " + name);
        slots.emplace(name, doms.size());
        doms.push_back(&it->second);
        if (total > config_.enumeration_cap / it->second.size() + 1)
            throw CapExceeded("assignments", config_.enumeration_cap);
        total *= it->second.size();
    }
    if (total > config_.enumeration_cap)
        throw CapExceeded("assignments", config_.enumeration_cap);

    const CompiledFormula cf(f, slots);
    const CompiledFormula cg(g, slots);
    std::vector<std::size_t> idx(doms.size(), 0);
    std::vector<Int> values(doms.size());
    for (std::size_t i = 0; i < doms.size(); ++i)
        values[i] = (*doms[i])[0];

    std::size_t visited = 0;
    std::optional<Valuation> found;
    for (;;) {
        ++visited;
        bool hit = false;
        switch (q) {
        case Query::Sat: hit = cf(values); break;
        case Query::Falsifiable: hit = !cf(values); break;
        case Query::ImpliesFails: hit = cf(values) && !cg(values); break;
        case Query::Differs: hit = cf(values) != cg(values); break;
        }
        if (hit) {
            Valuation v;
            for (const auto& [name, slot] : slots)
                v[name] = values[slot];
            found = std::move(v);
            break;
        }
        std::size_t i = 0;
        for (; i < doms.size(); ++i) {
            if (++idx[i] < doms[i]->size()) {
                values[i] = (*doms[i])[idx[i]];
                break;
            }
            idx[i] = 0;
            values[i] = (*doms[i])[0];
        }
        if (i == doms.size())
            break;
    }
    std::lock_guard lock(mutex_);
    stats_.assignments_enumerated += visited;
    return found;
}

bool Oracle::solve_external(Query q, const Formula& f, const Formula& g)
{
    std::set<std::string> vars = free_variables(f);
    const std::set<std::string> more = free_variables(g);
    vars.insert(more.begin(), more.end());

    std::ostringstream script;
    script << "(set-logic " << logic_for(f, g) << ")\n";
    for (const auto& v : vars)
        script << "(declare-const " << v << " Int)\n";
    const std::string a = f.to_smtlib();
    const std::string b = g.to_smtlib();
    switch (q) {
    case Query::Sat: script << "(assert " << a << ")\n"; break;
    case Query::Falsifiable: script << "(assert (not " << a << "))\n"; break;
    case Query::ImpliesFails: script << "(assert (and " << a << " (not " << b << ")))\n"; break;
    case Query::Differs: script << "(assert (distinct " << a << " " << b << "))\n"; break;
    }
    script << "(check-sat)\n(exit)\n";
    {
        std::lock_guard lock(mutex_);
        ++stats_.solver_calls;
    }
    const std::string out = run_solver(config_.solver_command, script.str(), config_.timeout_ms);
    std::istringstream in(out);
    std::string verdict;
    in >> verdict;
    if (verdict == "sat")
        return true;
    if (verdict == "unsat")
        return false;
    throw SolverFailure("unexpected solver answer: " + out.substr(0, 200));
}

UnsatCoreSet Oracle::minimal_unsat_cores(const std::vector<Formula>& fs)
{
    UnsatCoreSet result;
    const std::size_t n = fs.size();
    if (n == 0 || is_sat(conjoin_all(fs)))
        return result;

    auto conj = [&](const std::vector<std::size_t>& subset) {
        Formula c;
        for (std::size_t i : subset)
            c = conjoin(c, fs[i]);
        return c;
    };
    auto contains_core = [&](const std::vector<std::size_t>& subset) {
        return std::any_of(result.cores.begin(), result.cores.end(), [&](const auto& core) {
            return std::includes(subset.begin(), subset.end(), core.begin(), core.end());
        });
    };

    std::size_t checks = 0;
    bool exhausted = false;
    for (std::size_t k = 1; k <= n && !exhausted; ++k) {
        std::vector<std::size_t> subset(k);
        for (std::size_t i = 0; i < k; ++i)
            subset[i] = i;
        for (;;) {
            if (!contains_core(subset)) {
                if (checks++ >= config_.core_check_budget) {
                    exhausted = true;
                    break;
                }
                if (!is_sat(conj(subset))) {
                    result.cores.push_back(subset);
                    if (result.cores.size() >= config_.max_cores) {
                        result.truncated = k < n;
                        return result;
                    }
                }
            }
            // next k-combination in lexicographic order
            std::size_t i = k;
            while (i > 0 && subset[i - 1] == n - k + i - 1)
                --i;
            if (i == 0)
                break;
            ++subset[i - 1];
            for (std::size_t j = i; j < k; ++j)
                subset[j] = subset[j - 1] + 1;
        }
    }
    if (exhausted) {
        result.truncated = true;
        if (result.cores.empty()) {
            std::vector<std::size_t> seed(n);
            for (std::size_t i = 0; i < n; ++i)
                seed[i] = i;
            for (std::size_t i = 0; i < seed.size();) {
                std::vector<std::size_t> smaller = seed;
                smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(i));
                if (!is_sat(conj(smaller)))
                    seed = std::move(smaller);
                else
                    ++i;
            }
            result.cores.push_back(seed);
        }
    }
    return result;
}

std::optional<Valuation> Oracle::witness(const Formula& f)
{
    if (config_.mode != OracleConfig::Mode::FiniteDomain)
        return std::nullopt;
    if (f.is_false())
        return std::nullopt;
    return enumerate(Query::Sat, f, Formula());
}

EquivalenceCheck Oracle::equivalence_check()
{
    return [this](const Formula& a, const Formula& b) { return equivalent(a, b); };
}

OracleStats Oracle::stats() const
{
    std::lock_guard lock(mutex_);
    return stats_;
}

void Oracle::clear_cache()
{
    std::lock_guard lock(mutex_);
    cache_.clear();
}

std::string run_solver(const std::string& command, const std::string& input, unsigned timeout_ms)
{
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0)
        throw SolverFailure(std::string("pipe: ") + std::strerror(errno));
    if (pipe(from_child) != 0) {
        close(to_child[0]);
        close(to_child[1]);
        throw SolverFailure(std::string("pipe: ") + std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[1]);
    posix_spawn_file_actions_addclose(&actions, from_child[0]);

    std::string cmd = command;
    char sh[] = "/bin/sh";
    char dash_c[] = "-c";
    char* argv[] = {sh, dash_c, cmd.data(), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    close(to_child[0]);
    close(from_child[1]);
    if (rc != 0) {
        close(to_child[1]);
        close(from_child[0]);
        throw SolverFailure(std::string("spawn: ") + std::strerror(rc));
    }

    // a solver that exits early must not kill us with SIGPIPE
    struct sigaction ignore {};
    struct sigaction previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);
    std::size_t written = 0;
    while (written < input.size()) {
        const ssize_t k = write(to_child[1], input.data() + written, input.size() - written);
        if (k <= 0)
            break;
        written += static_cast<std::size_t>(k);
    }
    close(to_child[1]);
    sigaction(SIGPIPE, &previous, nullptr);

    std::string out;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    bool timed_out = false;
    char buf[4096];
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd pfd{from_child[0], POLLIN, 0};
        const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno == EINTR)
            continue;
        if (ready <= 0) {
            timed_out = ready == 0;
            break;
        }
        const ssize_t k = read(from_child[0], buf, sizeof buf);
        if (k <= 0)
            break;
        out.append(buf, static_cast<std::size_t>(k));
    }
    close(from_child[0]);
    if (timed_out)
        kill(pid, SIGKILL);
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (timed_out)
        throw SolverFailure("solver timed out after " + std::to_string(timeout_ms) + " ms");
    if (!WIFEXITED(status))
        throw SolverFailure("solver terminated abnormally");
    if (WEXITSTATUS(status) == 127)
        throw SolverFailure("solver command not found: " + command);
    return out;
}

} // namespace weaver
