#ifndef WEAVER_AUTOMATA_HPP
#define WEAVER_AUTOMATA_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace weaver {

using StateId = std::size_t;
using Word = std::vector<std::string>;

/// Positive boolean combination of automaton states. Values are kept
/// flattened, sorted and free of redundant constants.
class PosBool {
public:
    enum class Kind { False, True, Leaf, And, Or };

    /// FALSE
    PosBool() = default;

    static PosBool falsity() { return PosBool(); }
    static PosBool truth();
    static PosBool leaf(StateId s);
    static PosBool conj(std::vector<PosBool> parts);
    static PosBool disj(std::vector<PosBool> parts);

    Kind kind() const { return kind_; }
    StateId state() const { return state_; }
    const std::vector<PosBool>& children() const { return children_; }
    bool is_false() const { return kind_ == Kind::False; }
    bool is_true() const { return kind_ == Kind::True; }

    bool evaluate(const std::function<bool(StateId)>& leaf_value) const;
    void collect_leaves(std::set<StateId>& out) const;
    /// Swaps AND/OR and TRUE/FALSE; leaves stay.
    PosBool dual() const;
    PosBool substitute(const std::function<PosBool(StateId)>& f) const;
    PosBool shifted(StateId offset) const;
    std::string to_string() const;

    friend int compare(const PosBool& a, const PosBool& b);
    friend bool operator==(const PosBool& a, const PosBool& b) { return compare(a, b) == 0; }
    friend bool operator<(const PosBool& a, const PosBool& b) { return compare(a, b) < 0; }

private:
    static PosBool combine(Kind kind, std::vector<PosBool> parts);

    Kind kind_ = Kind::False;
    StateId state_ = 0;
    std::vector<PosBool> children_;
};

/// Sorted set of states; a model of a PosBool when all its members are true.
using StateSet = std::vector<StateId>;
/// Antichain of minimal models, sorted.
using ModelSet = std::vector<StateSet>;

ModelSet minimal_models(const PosBool& f);

/**
 * Alternating automaton over a finite alphabet of operation labels. Every
 * (state, letter) and (state, epsilon) pair carries a PosBool; missing
 * transitions are FALSE. `universal` is a presentation hint for exports.
 */
struct Afa {
    std::vector<std::string> alphabet;
    std::vector<std::vector<PosBool>> delta;
    std::vector<PosBool> epsilon;
    std::vector<bool> accepting;
    std::vector<bool> universal;
    std::vector<std::string> names;
    PosBool initial;

    explicit Afa(std::vector<std::string> letters = {}) : alphabet(std::move(letters)) {}

    std::size_t size() const { return delta.size(); }
    StateId add_state(std::string name = {}, bool is_accepting = false, bool is_universal = false);
    std::size_t letter(const std::string& label) const;
    void add_transition(StateId s, std::size_t letter, const PosBool& f);
    void add_epsilon(StateId s, const PosBool& f);
    bool has_epsilon() const;
};

struct Nfa {
    std::vector<std::string> alphabet;
    /// successors[state][letter]
    std::vector<std::vector<std::vector<StateId>>> successors;
    std::vector<StateId> initial;
    std::vector<bool> accepting;

    explicit Nfa(std::vector<std::string> letters = {}) : alphabet(std::move(letters)) {}

    std::size_t size() const { return successors.size(); }
    StateId add_state(bool is_accepting = false);
    void add_transition(StateId from, std::size_t letter, StateId to);
};

Afa to_afa(const Nfa& n);
bool nfa_accepts(const Nfa& n, const Word& w);

/// Finite-run acceptance: at most |states| consecutive epsilon steps between letters.
bool afa_accepts(const Afa& a, const Word& w);
bool afa_accepts_from(const Afa& a, StateId s, const Word& w);

Afa eliminate_epsilon(const Afa& a);
/// Throws EpsilonPresent.
Afa complement(const Afa& a);
/// Throws AlphabetMismatch.
Afa intersect(const Afa& a, const Afa& b);
/// Drops states unreachable from the initial condition.
Afa trim(const Afa& a);

/// Subset construction over minimal models. Throws CapExceeded.
Nfa afa_to_nfa(const Afa& a, std::size_t cap);

struct WordSearch {
    std::optional<Word> word;
    std::size_t explored = 0;
};

/// Shortest accepted word, ties broken lexicographically by alphabet order.
/// Throws CapExceeded when more than `cap` subset states are explored.
WordSearch shortest_word(const Afa& a, std::size_t cap);

/// `notes`, when given, is drawn beside each state.
std::string to_dot(const Afa& a, const std::string& title = "afa", const std::vector<std::string>& notes = {});
nlohmann::json to_json(const Afa& a);

} // namespace weaver

#endif
