// Acceptance checks, one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "weaver/verifier.hpp"
#include "afa_reference.hpp"
#include "sampling.hpp"

using namespace weaver;

namespace {

std::string slurp(const std::string& name)
{
    std::ifstream in(std::string(WEAVER_CORPUS_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Word W(const std::string& s)
{
    Word w;
    for (char c : s)
        w.push_back(std::string(1, c));
    return w;
}

Word reversed(Word w)
{
    std::reverse(w.begin(), w.end());
    return w;
}

const std::vector<std::string> safe_files = {"dekker.cprog", "peterson.cprog", "rwlock.cprog",
                                             "time_var_mutex.cprog"};
const std::vector<std::string> broken_files = {"dekker_broken.cprog", "peterson_broken.cprog",
                                               "peterson_swapped.cprog", "rwlock_broken.cprog",
                                               "time_var_mutex_broken.cprog"};

/// Collects failures of one criterion.
struct Check {
    std::size_t failures = 0;
    std::string first;

    void operator()(bool ok, const std::string& what)
    {
        if (ok)
            return;
        if (failures++ == 0)
            first = what;
    }
};

int failed_criteria = 0;

void report(int n, const std::string& name, const Check& c, const std::string& detail)
{
    const bool ok = c.failures == 0;
    failed_criteria += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << n << ". " << name << ": " << detail;
    if (!ok)
        std::cout << " [" << c.failures << " failures, first: " << c.first << "]";
    std::cout << std::endl;
}

void verdicts()
{
    Check c;
    std::ostringstream detail;
    for (const std::string f : {"peterson.cprog", "dekker.cprog"}) {
        const Verdict v = verify(parse_program(slurp(f)));
        c(v.outcome == Outcome::Safe, f + " is " + to_string(v.outcome));
        c(v.seconds < 120, f + " took too long");
        detail << f << " " << to_string(v.outcome) << " in " << v.seconds << " s; ";
    }
    report(1, "verdict reproduction", c, detail.str());
}

void counterexamples()
{
    Check c;
    std::size_t confirmed = 0;
    for (const auto& f : broken_files) {
        const Program p = parse_program(slurp(f));
        const Verdict v = verify(p);
        const Verdict b = brute_force_check(p);
        c(v.outcome == Outcome::Unsafe, f + " is " + to_string(v.outcome));
        c(b.outcome == Outcome::Unsafe, f + " explicit search says " + to_string(b.outcome));
        if (v.counterexample) {
            const bool ok = validate_counterexample(p, compose(p), *v.counterexample);
            c(ok, f + " counterexample does not validate");
            confirmed += ok && b.outcome == Outcome::Unsafe;
        }
    }
    report(2, "counterexample soundness", c,
           std::to_string(confirmed) + "/" + std::to_string(broken_files.size()) +
               " broken variants unsafe, validated and confirmed");
}

/// Mix of corpus programs and random programs for the proof suites.
std::vector<Program> proof_programs()
{
    std::vector<Program> out;
    for (const auto& f : safe_files)
        out.push_back(parse_program(slurp(f)));
    for (const auto& f : broken_files)
        out.push_back(parse_program(slurp(f)));
    std::mt19937 rng(31);
    for (int i = 0; i < 9; ++i)
        out.push_back(parse_program(random_program_text(rng)));
    return out;
}

void soundness()
{
    Check c;
    std::mt19937 rng(303);
    std::size_t triples = 0, states = 0;
    const auto programs = proof_programs();
    for (int round = 0; triples < 240; ++round) {
        const Program& p = programs[round % programs.size()];
        const ProductNfa prod = compose(p);
        Oracle oracle(p.domains());
        const Word labels = test::random_walk(rng, prod, 1 + rng() % 8);
        const Formula phi = test::random_formula(rng, p);
        const ProofAfa built = build_proof_afa(p.trace(labels), phi, p.alphabet(), oracle);
        ++triples;
        c(afa_accepts(built.afa, reversed(labels)), "rev(sigma) rejected for " + phi.to_string());
        for (StateId s = 0; s < built.size(); ++s, ++states)
            c(afa_accepts_from(built.afa, s, reversed(built.rmap_word(s))),
              "rev(RMap(s" + std::to_string(s) + ")) rejected");
    }
    report(3, "proof soundness suite", c,
           std::to_string(triples) + " triples, " + std::to_string(states) + " states checked");
}

/// Accepted words of length at most `max_len` in depth-first order, at most
/// `limit` of them; prefixes that cannot reach acceptance are pruned.
std::vector<Word> enumerate_accepted(const Nfa& n, std::size_t max_len, std::size_t limit)
{
    std::vector<std::vector<bool>> live(max_len + 1, std::vector<bool>(n.size(), false));
    for (StateId q = 0; q < n.size(); ++q)
        live[0][q] = n.accepting[q];
    for (std::size_t k = 1; k <= max_len; ++k)
        for (StateId q = 0; q < n.size(); ++q) {
            bool ok = live[k - 1][q];
            for (const auto& succ : n.successors[q])
                for (StateId t : succ)
                    ok = ok || live[k - 1][t];
            live[k][q] = ok;
        }
    std::vector<Word> out;
    Word w;
    std::function<void(const std::set<StateId>&)> visit = [&](const std::set<StateId>& cur) {
        if (out.size() >= limit)
            return;
        const std::size_t left = max_len - w.size();
        if (std::none_of(cur.begin(), cur.end(), [&](StateId q) { return live[left][q]; }))
            return;
        if (std::any_of(cur.begin(), cur.end(), [&](StateId q) { return n.accepting[q]; }))
            out.push_back(w);
        if (left == 0)
            return;
        for (std::size_t l = 0; l < n.alphabet.size(); ++l) {
            std::set<StateId> next;
            for (StateId q : cur)
                next.insert(n.successors[q][l].begin(), n.successors[q][l].end());
            if (next.empty())
                continue;
            w.push_back(n.alphabet[l]);
            visit(next);
            w.pop_back();
        }
    };
    visit({n.initial.begin(), n.initial.end()});
    return out;
}

void transformations()
{
    Check c;
    std::mt19937 rng(404);
    std::size_t triples = 0, full = 0, words = 0, automata = 0, exhausted = 0;
    const auto programs = proof_programs();
    for (int round = 0; full < 110; ++round) {
        const Program& p = programs[round % programs.size()];
        const ProductNfa prod = compose(p);
        Oracle oracle(p.domains());
        const Word labels = test::random_walk(rng, prod, 1 + rng() % 7);
        const Formula phi = test::random_formula(rng, p);
        const ProofAfa built = compute_hmap(build_proof_afa(p.trace(labels), phi, p.alphabet(), oracle), oracle);
        ++triples;
        c(oracle.equivalent(*built.hmap[0], wp_trace(p.trace(labels), phi)), "HMap(s0) differs from wp");
        const ProofAfa alg1 = generalize_universal(built, oracle);
        const ProofAfa edges = add_edges(alg1, oracle);
        const std::size_t bound = labels.size() + 2;
        bool all_twenty = true;
        for (const ProofAfa* stage : {&built, &alg1, &edges}) {
            const Nfa n = afa_to_nfa(eliminate_epsilon(stage->afa), 500000);
            auto sample = test::sample_accepted(n, bound, 20, rng, 2000);
            if (sample.size() < 20) {
                for (const auto& w : enumerate_accepted(n, bound, 20))
                    if (std::find(sample.begin(), sample.end(), w) == sample.end() && sample.size() < 20)
                        sample.push_back(w);
                exhausted += sample.size() < 20;
            }
            ++automata;
            all_twenty = all_twenty && sample.size() >= 20;
            for (const auto& w : sample) {
                ++words;
                c(oracle.equivalent(*stage->hmap[0], wp_trace(p.trace(reversed(w)), phi)),
                  "HMap(s0) differs from wp of an accepted word");
            }
        }
        full += all_twenty;
    }
    std::ostringstream detail;
    detail << triples << " triples, " << full << " with at least 20 accepted words at every stage; " << automata
           << " automata, " << words << " words (" << exhausted
           << " automata had fewer than 20 words in the bounded language and were checked exhaustively)";
    report(4, "transformation suite", c, detail.str());
}

void golden()
{
    Check c;
    const Program p = parse_program(slurp("peterson.cprog"));
    Oracle oracle(p.domains());
    const ProofAfa h =
        compute_hmap(build_proof_afa(p.trace(W("abApqPrcs")), negate(parse_formula("l2 = 2")), p.alphabet(), oracle),
                     oracle);
    auto amap_is = [&](StateId s, const std::string& f) {
        return s < h.size() && oracle.equivalent(h.amap[s], parse_formula(f));
    };
    c(h.size() == 14, "Peterson proof has " + std::to_string(h.size()) + " states");
    c(amap_is(1, "!(res = 2)"), "s1");
    c(amap_is(2, "true"), "s2");
    c(amap_is(3, "flag1 = 0 || turn = 2") && h.rmap_word(3) == W("abApq"), "s3");
    c(amap_is(10, "flag2 = 0") && h.afa.accepting[10], "s10");
    c(oracle.equivalent(*h.hmap[0], Formula::falsity()), "HMap(s0)");
    c(h.size() > 9 && oracle.equivalent(*h.hmap[9], parse_formula("flag2 = 0")), "HMap(s9)");

    const std::vector<Operation> ops = {
        Operation::assign("a", "Y", parse_int_expr("x + 1")), Operation::assign("b", "W", parse_int_expr("t")),
        Operation::assign("c", "z", parse_int_expr("W")),     Operation::assign("d", "S", parse_int_expr("t + 1")),
        Operation::assign("e", "z", parse_int_expr("Y")),
    };
    Oracle small(DomainMap{{"S", {0, 1, 2, 3}},
                           {"t", {0, 1, 2, 3}},
                           {"W", {0, 1, 2, 3}},
                           {"x", {0, 1, 2, 3}},
                           {"Y", {0, 1, 2, 3, 4}},
                           {"z", {0, 1, 2, 3, 4}}});
    const ProofAfa u = compute_hmap(build_proof_afa(ops, parse_formula("S < t && z < x"), ops, small), small);
    std::vector<Formula> hs;
    for (StateId s : u.children[0])
        hs.push_back(*u.hmap[s]);
    std::set<std::set<StateId>> cores;
    for (const auto& core : small.minimal_unsat_cores(hs).cores) {
        std::set<StateId> states;
        for (std::size_t i : core)
            states.insert(u.children[0][i]);
        cores.insert(states);
    }
    c(cores == std::set<std::set<StateId>>{{1}, {2}}, "cores of s0");
    const ProofAfa g = generalize_universal(u, small);
    c(g.converted == std::vector<StateId>{0}, "s0 not converted");
    c(afa_accepts(g.afa, reversed(W("adcbe"))), "rev(adcbe) rejected after generalization");
    c(afa_accepts(g.afa, W("adcbe")) && !afa_accepts(u.afa, W("adcbe")),
      "adcbe accepted only after generalization");
    report(5, "figure golden test", c,
           "14-state Peterson proof with HMap(s0) = false and HMap(s9) = flag2 = 0; cores {{s1},{s2}}");
}

void differential()
{
    Check c;
    std::mt19937 rng(1);
    const int count = 200;
    std::size_t unsafe = 0, unknown = 0;
    std::vector<double> seconds;
    for (int i = 0; i < count; ++i) {
        const std::string text = random_program_text(rng);
        const Program p = parse_program(text);
        const Verdict b = brute_force_check(p);
        const Verdict v = verify(p);
        seconds.push_back(v.seconds);
        unknown += v.outcome == Outcome::Unknown;
        c(v.outcome == b.outcome, "program " + std::to_string(i) + ": " + to_string(v.outcome) + " vs " +
                                      to_string(b.outcome));
        if (v.outcome == Outcome::Unsafe) {
            ++unsafe;
            c(validate_counterexample(p, compose(p), *v.counterexample), "program " + std::to_string(i) + " trace");
        }
    }
    std::sort(seconds.begin(), seconds.end());
    const double median = seconds[seconds.size() / 2];
    c(median < 5.0, "median runtime " + std::to_string(median));
    std::ostringstream detail;
    detail << count << " programs (" << unsafe << " unsafe, " << count - unsafe - unknown << " safe, " << unknown
           << " unknown), median " << median << " s, max " << seconds.back() << " s";
    report(6, "differential model checking", c, detail.str());
}

void automata_algebra()
{
    Check c;
    std::mt19937 rng(707);
    const int count = 60;
    std::size_t words_checked = 0;
    for (int round = 0; round < count; ++round) {
        const Afa a = test::random_afa(rng, 5, 3, true);
        const Afa b = test::random_afa(rng, 4, 3, true);
        const Afa e = eliminate_epsilon(a);
        const Afa eb = eliminate_epsilon(b);
        const Afa comp = complement(e);
        const Afa back = complement(comp);
        const Afa both = intersect(e, eb);
        std::optional<Word> first;
        for (const auto& w : test::all_words(a.alphabet, 6)) {
            ++words_checked;
            const bool in = test::reference_accepts(a, w);
            const bool in_b = test::reference_accepts(b, w);
            c(afa_accepts(e, w) == in, "epsilon elimination");
            c(afa_accepts(comp, w) != afa_accepts(e, w), "complement totality");
            c(afa_accepts(back, w) == afa_accepts(e, w), "complement involution");
            c(afa_accepts(both, w) == (in && in_b), "intersection");
            if (in && !first)
                first = w;
        }
        const WordSearch found = shortest_word(e, 1'000'000);
        if (first)
            c(found.word && *found.word == *first, "shortest word");
        else
            c(!found.word || (found.word->size() > 6 && test::reference_accepts(a, *found.word)), "shortest word");
    }
    report(7, "automata algebra", c,
           std::to_string(count) + " random automata per property, " + std::to_string(words_checked) +
               " words up to length 6");
}

void interleavings()
{
    Check c;
    const Program p = parse_program(R"(
shared x : {0,1} = 0;
process A { init a0; a0 -> a1 : a : x := 1; a1 -> a2 : b : x := 0; a2 -> a3 : c : x := 1; assert a3 : true; }
process B { init b0; b0 -> b1 : d : x := 0; b1 -> b2 : e : x := 1; b2 -> b3 : f : x := 0; assert b3 : true; }
)");
    const ProductNfa prod = compose(p);
    std::size_t complete = 0, accepted = 0;
    for (const auto& w : test::all_words(p.labels, 7)) {
        if (!nfa_accepts(prod.nfa, w))
            continue;
        ++accepted;
        if (w.size() == 6)
            ++complete;
    }
    std::function<std::size_t(std::size_t)> fact = [&](std::size_t n) { return n <= 1 ? 1 : n * fact(n - 1); };
    const std::size_t expected = fact(6) / (fact(3) * fact(3));
    c(complete == expected, std::to_string(complete) + " complete executions");
    report(8, "interleaving count", c,
           std::to_string(complete) + " complete executions = 6!/(3!3!) = " + std::to_string(expected) + " (" +
               std::to_string(accepted) + " accepted words including prefixes that reach an assertion)");
}

void progress()
{
    Check c;
    std::ostringstream detail;
    std::size_t total = 0;
    for (const auto& files : {safe_files, broken_files}) {
        for (const auto& f : files) {
            const Program p = parse_program(slurp(f));
            VerifyConfig cfg;
            std::size_t checked = 0;
            cfg.on_iteration = [&](const IterationReport& r) {
                ++checked;
                c(!afa_accepts(*r.remaining, reversed(r.trace)), f + " iteration " + std::to_string(r.iteration));
            };
            const Verdict v = verify(p, cfg);
            c(v.outcome != Outcome::Unknown, f + ": " + v.reason);
            c(v.iterations <= cfg.max_iterations, f + " iteration count");
            total += v.iterations;
            detail << f.substr(0, f.find('.')) << " " << v.iterations << ", ";
        }
    }
    detail << "total " << total << " iterations";
    report(9, "termination and progress", c, detail.str());
}

} // namespace

int main()
{
    const auto start = std::chrono::steady_clock::now();
    const std::vector<void (*)()> criteria = {verdicts,         counterexamples, soundness,        transformations,  golden,
                                              differential,     automata_algebra, interleavings, progress};
    for (auto run : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            ++failed_criteria;
            std::cout << "FAIL  exception: " << e.what() << std::endl;
        }
    }
    std::cout << (failed_criteria == 0 ? "all criteria pass" : std::to_string(failed_criteria) + " criteria fail")
              << " (" << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s)"
              << std::endl;
    return failed_criteria == 0 ? 0 : 1;
}
