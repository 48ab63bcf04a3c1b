#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "weaver/errors.hpp"
#include "weaver/program.hpp"
#include "weaver/proof_afa.hpp"
#include "afa_reference.hpp"
#include "sampling.hpp"

using namespace weaver;

namespace {

std::string slurp(const std::string& name)
{
    std::ifstream in(std::string(WEAVER_CORPUS_DIR) + "/" + name);
    REQUIRE(in.good());
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

Formula F(const std::string& s) { return parse_formula(s); }

std::set<std::string> loop_letters(const ProofAfa& p, StateId s)
{
    std::set<std::string> out;
    for (std::size_t l = 0; l < p.afa.alphabet.size(); ++l) {
        std::set<StateId> leaves;
        p.afa.delta[s][l].collect_leaves(leaves);
        if (leaves.count(s))
            out.insert(p.afa.alphabet[l]);
    }
    return out;
}

bool has_edge(const PosBool& f, StateId t)
{
    std::set<StateId> leaves;
    f.collect_leaves(leaves);
    return leaves.count(t) > 0;
}

struct Peterson {
    Program program = parse_program(slurp("peterson.cprog"));
    Oracle oracle{program.domains()};
    ProofAfa built =
        build_proof_afa(program.trace(W("abApqPrcs")), negate(F("l2 = 2")), program.alphabet(), oracle);
};

/// The five-operation trace of the universal-state example.
struct Abcde {
    std::vector<Operation> ops = {
        Operation::assign("a", "Y", parse_int_expr("x + 1")), Operation::assign("b", "W", parse_int_expr("t")),
        Operation::assign("c", "z", parse_int_expr("W")),     Operation::assign("d", "S", parse_int_expr("t + 1")),
        Operation::assign("e", "z", parse_int_expr("Y")),
    };
    Oracle oracle{DomainMap{{"S", {0, 1, 2, 3}},
                            {"t", {0, 1, 2, 3}},
                            {"W", {0, 1, 2, 3}},
                            {"x", {0, 1, 2, 3}},
                            {"Y", {0, 1, 2, 3, 4}},
                            {"z", {0, 1, 2, 3, 4}}}};
    ProofAfa built = build_proof_afa(ops, F("S < t && z < x"), ops, oracle);
};

} // namespace

TEST_CASE("peterson trace: states and annotations")
{
    Peterson t;
    const ProofAfa& p = t.built;
    REQUIRE(p.size() == 14);
    CHECK(p.amap[0] == F("l2 != 2"));
    CHECK(p.rmap[0] == 9);
    CHECK(p.amap[1] == F("res != 2"));
    CHECK(p.amap[2].is_true());
    CHECK(p.amap[3] == F("flag1 = 0 || turn = 2"));
    CHECK(p.rmap_word(3) == W("abApq"));
    CHECK(p.amap[4] == F("flag1 = 0"));
    CHECK(p.amap[5] == F("turn = 2"));
    CHECK(p.amap[6].is_false());
    CHECK(p.amap[7] == F("flag1 = 0 && (flag2 = 0 || turn = 1)"));
    CHECK(p.amap[8] == F("flag1 = 0"));
    CHECK(p.amap[9] == F("flag2 = 0 || turn = 1"));
    CHECK(p.amap[10] == F("flag2 = 0"));
    CHECK(p.amap[11] == F("turn = 1"));
    CHECK(p.amap[12].is_false());
    CHECK(p.amap[13].is_false());
    CHECK(p.rmap_word(6) == W("abAp"));
    CHECK(p.rmap_word(7) == W("ab"));
    CHECK(p.rmap_word(10) == W("ab"));
    CHECK(p.rmap_word(12).empty());
    CHECK(p.rmap_word(13) == W("a"));

    for (StateId s = 0; s < p.size(); ++s) {
        CAPTURE(s);
        const bool acc = s == 6 || s == 10 || s == 12 || s == 13;
        CHECK(p.afa.accepting[s] == acc);
        const bool uni = s == 3 || s == 7 || s == 9;
        CHECK(p.afa.universal[s] == uni);
    }
    CHECK(p.children[3] == std::vector<StateId>{4, 5});
    CHECK(p.children[7] == std::vector<StateId>{8, 9});
    CHECK(p.children[9] == std::vector<StateId>{10, 11});
    CHECK(p.successor[0] == StateId{1});
    CHECK(p.successor[1] == StateId{2});
    CHECK(p.successor[2] == StateId{3});
    CHECK(p.successor[4] == StateId{7});
    CHECK(p.successor[5] == StateId{6});
    CHECK(p.successor[8] == StateId{12});
    CHECK(p.successor[11] == StateId{13});
    CHECK(p.afa.delta[0][p.afa.letter("s")] == PosBool::leaf(1));
    CHECK(p.afa.delta[2][p.afa.letter("P")] == PosBool::leaf(3));
    CHECK(p.afa.delta[4][p.afa.letter("A")] == PosBool::leaf(7));
    CHECK(p.afa.delta[11][p.afa.letter("b")] == PosBool::leaf(13));

    // self-loops: every letter except those changing the annotation
    const std::set<std::string> all(p.afa.alphabet.begin(), p.afa.alphabet.end());
    auto all_but = [&](std::set<std::string> drop) {
        std::set<std::string> out;
        for (const auto& l : all)
            if (!drop.count(l))
                out.insert(l);
        return out;
    };
    CHECK(loop_letters(p, 0) == all_but({"s", "A", "B", "P", "Q"}));
    CHECK(loop_letters(p, 1) == all_but({"c", "r", "A", "B", "P", "Q"}));
    CHECK(loop_letters(p, 13) == all);
    CHECK(loop_letters(p, 3).empty());
}

TEST_CASE("peterson trace: hmap")
{
    Peterson t;
    const ProofAfa p = compute_hmap(t.built, t.oracle);
    REQUIRE(p.hmap_complete());
    CHECK(*p.hmap[10] == F("flag2 = 0"));
    CHECK(*p.hmap[9] == F("flag2 = 0"));
    for (StateId s : {0, 1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13})
        CHECK(t.oracle.equivalent(*p.hmap[s], Formula::falsity()));
    CHECK(t.oracle.equivalent(*p.hmap[0], wp_trace(p.sigma, p.phi)));
}

TEST_CASE("peterson trace: proof soundness and generalization")
{
    Peterson t;
    const ProofAfa& p = t.built;
    for (StateId s = 0; s < p.size(); ++s)
        CHECK(afa_accepts_from(p.afa, s, reversed(p.rmap_word(s))));

    const Word novel = reversed(W("abpqPArcs"));
    CHECK_FALSE(afa_accepts(p.afa, novel));

    const ProofAfa g = generalize_universal(compute_hmap(p, t.oracle), t.oracle);
    CHECK(g.converted == std::vector<StateId>{7});
    REQUIRE(g.size() == 15);
    CHECK(g.children[14] == std::vector<StateId>{8});
    CHECK(g.afa.epsilon[7] == PosBool::leaf(14));
    CHECK_FALSE(g.afa.universal[7]);

    const ProofAfa e = add_edges(g, t.oracle);
    CHECK(has_edge(e.afa.epsilon[4], 8));
    CHECK(has_edge(e.afa.delta[8][e.afa.letter("P")], 8));
    CHECK(has_edge(e.afa.delta[2][e.afa.letter("A")], 2));
    CHECK(afa_accepts(e.afa, novel));
    CHECK(afa_accepts(eliminate_epsilon(e.afa), novel));

    const std::string dot = to_dot(e);
    CHECK(dot.find("s10: flag2 = 0") != std::string::npos);
    CHECK(dot.find("R: ab\\nH: flag2 = 0") != std::string::npos);
    const auto j = to_json(e);
    CHECK(j["states"].size() == 15);
    CHECK(j["states"][3]["rmap"] == std::vector<std::string>{"a", "b", "A", "p", "q"});
}

TEST_CASE("universal example: construction and cores")
{
    Abcde t;
    const ProofAfa& p = t.built;
    REQUIRE(p.size() == 6);
    CHECK(p.afa.universal[0]);
    CHECK(p.children[0] == std::vector<StateId>{1, 2});
    CHECK(p.amap[1] == F("S < t"));
    CHECK(p.amap[2] == F("z < x"));
    CHECK(p.afa.delta[1][p.afa.letter("d")] == PosBool::leaf(3));
    CHECK(p.amap[3].is_false());
    CHECK(p.afa.delta[2][p.afa.letter("e")] == PosBool::leaf(4));
    CHECK(p.amap[4] == F("Y < x"));
    CHECK(p.afa.delta[4][p.afa.letter("a")] == PosBool::leaf(5));
    CHECK(p.amap[5].is_false());
    CHECK(loop_letters(p, 1) == std::set<std::string>{"a", "b", "c", "e"});
    CHECK(loop_letters(p, 2) == std::set<std::string>{"a", "b", "d"});
    CHECK(loop_letters(p, 4) == std::set<std::string>{"b", "c", "d", "e"});
    CHECK(loop_letters(p, 5) == std::set<std::string>{"a", "b", "c", "d", "e"});

    const ProofAfa h = compute_hmap(p, t.oracle);
    for (StateId s = 0; s < h.size(); ++s)
        CHECK(t.oracle.equivalent(*h.hmap[s], Formula::falsity()));

    CHECK_FALSE(afa_accepts(p.afa, W("adcbe")));
    const ProofAfa g = generalize_universal(h, t.oracle);
    CHECK(g.converted == std::vector<StateId>{0});
    REQUIRE(g.size() == 8);
    CHECK(g.children[6] == std::vector<StateId>{1});
    CHECK(g.children[7] == std::vector<StateId>{2});
    CHECK(afa_accepts(g.afa, W("adcbe")));
    CHECK(afa_accepts(g.afa, W("ebcda")));
}

TEST_CASE("trivial constructions")
{
    Oracle oracle(DomainMap{{"x", {0, 1}}});
    const std::vector<Operation> ops = {Operation::assign("a", "x", parse_int_expr("1"))};
    const ProofAfa p = compute_hmap(build_proof_afa({}, F("x = 1"), ops, oracle), oracle);
    REQUIRE(p.size() == 1);
    CHECK(p.afa.accepting[0]);
    CHECK(*p.hmap[0] == F("x = 1"));
    // satisfiable hmaps leave generalization with nothing to do
    const ProofAfa g = add_edges(generalize_universal(p, oracle), oracle);
    CHECK(g.converted.empty());
    CHECK(g.edges_added == 0);
    CHECK_THROWS_AS(build_proof_afa({Operation::skip("zz")}, F("x = 1"), ops, oracle), std::invalid_argument);
}

TEST_CASE("single core covering all children keeps the language")
{
    Oracle oracle(DomainMap{{"x", {0, 1, 2}}, {"y", {0, 1, 2}}});
    const std::vector<Operation> ops = {Operation::assign("a", "x", parse_int_expr("y")),
                                        Operation::assign("b", "y", parse_int_expr("1")),
                                        Operation::assign("c", "x", parse_int_expr("2"))};
    const ProofAfa h = compute_hmap(build_proof_afa({ops[0]}, F("x = 1 && y = 2"), ops, oracle), oracle);
    REQUIRE(h.size() == 4);
    const ProofAfa g = generalize_universal(h, oracle);
    REQUIRE(g.converted == std::vector<StateId>{0});
    for (const auto& w : weaver::test::all_words(g.afa.alphabet, 6))
        CHECK(afa_accepts(g.afa, w) == afa_accepts(h.afa, w));
}


TEST_CASE("proof soundness and transformations on sampled traces")
{
    std::mt19937 rng(4242);
    std::size_t samples = 0;
    std::size_t checked_words = 0;
    for (const char* f : {"peterson.cprog", "rwlock.cprog", "dekker.cprog", "time_var_mutex.cprog"}) {
        const Program prog = parse_program(slurp(f));
        const ProductNfa prod = compose(prog);
        Oracle oracle(prog.domains());
        for (int round = 0; round < 30; ++round, ++samples) {
            const Word labels = weaver::test::random_walk(rng, prod, 1 + rng() % 7);
            const Trace sigma = prog.trace(labels);
            const Formula phi = weaver::test::random_formula(rng, prog);
            CAPTURE(f);
            CAPTURE(phi.to_string());
            const ProofAfa built = compute_hmap(build_proof_afa(sigma, phi, prog.alphabet(), oracle), oracle);
            for (StateId s = 0; s < built.size(); ++s) {
                CHECK(afa_accepts_from(built.afa, s, reversed(built.rmap_word(s))));
                CHECK(built.afa.universal[s] == built.amap[s].is_compound());
            }
            CHECK(oracle.equivalent(*built.hmap[0], wp_trace(sigma, phi)));

            const ProofAfa alg1 = generalize_universal(built, oracle);
            const ProofAfa edges = add_edges(alg1, oracle);
            for (StateId s = 0; s < alg1.built_states; ++s) {
                const bool converted =
                    std::find(alg1.converted.begin(), alg1.converted.end(), s) != alg1.converted.end();
                CHECK(alg1.afa.universal[s] == (alg1.amap[s].is_compound() && !converted));
            }

            const std::size_t bound = labels.size() + 2;
            std::vector<Word> earlier;
            for (const ProofAfa* stage : {&built, &alg1, &edges}) {
                const Afa plain = eliminate_epsilon(stage->afa);
                const Nfa n = afa_to_nfa(plain, 200000);
                auto words = weaver::test::sample_accepted(n, bound, 20, rng);
                words.push_back(reversed(labels));
                for (const auto& w : earlier)
                    CHECK(afa_accepts(plain, w));
                for (const auto& w : words) {
                    CHECK(oracle.equivalent(*stage->hmap[0], wp_trace(prog.trace(reversed(w)), phi)));
                    ++checked_words;
                }
                earlier = words;
            }
        }
    }
    CHECK(samples >= 100);
    MESSAGE("transformation words checked: " << checked_words);
}

TEST_CASE("equivalent states fold a loop")
{
    const Program prog = parse_program(slurp("rwlock.cprog"));
    Oracle oracle(prog.domains());
    const Formula phi = F("y != 0");
    const Word once = W("pqrstuvpqrs");
    const ProofAfa built = compute_hmap(build_proof_afa(prog.trace(once), phi, prog.alphabet(), oracle), oracle);
    const ProofAfa base_rules = add_edges(generalize_universal(built, oracle), oracle, false);
    const ProofAfa folded = add_edges(generalize_universal(built, oracle), oracle);
    CHECK(folded.edges_added > base_rules.edges_added);
    for (const std::string loops : {"", "pqrstuv", "pqrstuvpqrstuv"}) {
        const Word w = reversed(W(loops + "pqrstuvpqrs"));
        CAPTURE(loops);
        CHECK(afa_accepts(eliminate_epsilon(folded.afa), w));
        CHECK(afa_accepts(eliminate_epsilon(base_rules.afa), w) == loops.empty());
        CHECK(oracle.equivalent(*folded.hmap[0], wp_trace(prog.trace(reversed(w)), phi)));
    }
}

TEST_CASE("slicing keeps every accepted trace refuted under the initial state")
{
    std::mt19937 rng(977);
    std::size_t refuted = 0;
    std::size_t sliced = 0;
    for (const char* f : {"peterson.cprog", "rwlock.cprog", "dekker.cprog", "time_var_mutex.cprog"}) {
        const Program prog = parse_program(slurp(f));
        const ProductNfa prod = compose(prog);
        const Formula init = prog.initial_formula();
        Oracle oracle(prog.domains());
        for (int round = 0; round < 40; ++round) {
            const Word labels = weaver::test::random_walk(rng, prod, 2 + rng() % 7);
            const Formula phi = weaver::test::random_formula(rng, prog);
            const ProofAfa built =
                compute_hmap(build_proof_afa(prog.trace(labels), phi, prog.alphabet(), oracle), oracle);
            if (oracle.is_sat(conjoin(init, *built.hmap[0])))
                continue;
            ++refuted;
            const ProofAfa cut = slice_conjunctions(built, init, oracle);
            sliced += cut.sliced.empty() ? 0 : 1;
            CHECK_FALSE(oracle.is_sat(conjoin(init, *cut.hmap[0])));
            const ProofAfa done = add_edges(generalize_universal(cut, oracle), oracle);
            const Afa plain = eliminate_epsilon(done.afa);
            CHECK(afa_accepts(plain, reversed(labels)));
            auto words = weaver::test::sample_accepted(afa_to_nfa(plain, 200000), labels.size() + 3, 20, rng);
            for (const auto& w : words) {
                const Formula pre = wp_trace(prog.trace(reversed(w)), phi);
                CHECK(oracle.implies(pre, *done.hmap[0]));
                CHECK_FALSE(oracle.is_sat(conjoin(init, pre)));
            }
        }
    }
    CHECK(refuted >= 50);
    CHECK(sliced > 0);
    MESSAGE("refuted samples: " << refuted << ", sliced: " << sliced);
}
