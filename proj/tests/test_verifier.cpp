#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "weaver/verifier.hpp"

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

const std::vector<std::pair<std::string, Outcome>> corpus = {
    {"dekker.cprog", Outcome::Safe},
    {"dekker_broken.cprog", Outcome::Unsafe},
    {"peterson.cprog", Outcome::Safe},
    {"peterson_broken.cprog", Outcome::Unsafe},
    {"peterson_swapped.cprog", Outcome::Unsafe},
    {"rwlock.cprog", Outcome::Safe},
    {"rwlock_broken.cprog", Outcome::Unsafe},
    {"time_var_mutex.cprog", Outcome::Safe},
    {"time_var_mutex_broken.cprog", Outcome::Unsafe},
};

} // namespace

TEST_CASE("single assignment is safe after one iteration")
{
    const Program p = parse_program(R"(
shared x : {0,1} = 0;
process P {
  init q0;
  q0 -> q1 : a : x := 1;
  assert q1 : x = 1;
}
)");
    const Verdict v = verify(p);
    CHECK(v.outcome == Outcome::Safe);
    CHECK(v.iterations == 1);
    REQUIRE(v.assertions.size() == 1);
    CHECK(v.assertions[0].iterations == 1);
    CHECK(brute_force_check(p).outcome == Outcome::Safe);
}

TEST_CASE("trivial assertions")
{
    const Program holds = parse_program(R"(
shared x : {0,1} = 0;
process P {
  init q0;
  q0 -> q1 : a : x := 1 - x;
  q1 -> q0 : b : x := 1 - x;
  assert q1 : x = x;
}
)");
    CHECK(verify(holds).outcome == Outcome::Safe);
    CHECK(brute_force_check(holds).outcome == Outcome::Safe);

    const Program none = parse_program(R"(
shared x : {0,1} = 0;
process P {
  init q0;
  q0 -> q0 : a : x := 1 - x;
}
)");
    const Verdict v = verify(none);
    CHECK(v.outcome == Outcome::Safe);
    CHECK(v.iterations == 0);

    const Program fails = parse_program(R"(
shared x : {0,1} = 0;
process P {
  init q0;
  q0 -> q1 : a : x := 1;
  assert q1 : x = 0;
}
)");
    const Verdict u = verify(fails);
    REQUIRE(u.outcome == Outcome::Unsafe);
    CHECK(u.counterexample->trace == W("a"));
    CHECK(u.counterexample->final_valuation.at("x") == 1);
}

TEST_CASE("corpus verdicts agree with explicit search")
{
    for (const auto& [file, expected] : corpus) {
        CAPTURE(file);
        const Program p = parse_program(slurp(file));
        const ProductNfa product = compose(p);
        const Verdict brute = brute_force_check(p);
        const Verdict v = verify(p);
        CHECK(brute.outcome == expected);
        CHECK(v.outcome == expected);
        CHECK(v.iterations <= VerifyConfig{}.max_iterations);
        if (expected == Outcome::Unsafe) {
            REQUIRE(v.counterexample);
            REQUIRE(brute.counterexample);
            CHECK(validate_counterexample(p, product, *v.counterexample));
            CHECK(validate_counterexample(p, product, *brute.counterexample));
        }
    }
}

TEST_CASE("counterexample validation")
{
    const Program p = parse_program(slurp("peterson.cprog"));
    const ProductNfa product = compose(p);
    const Formula l2 = parse_formula("l2 = 2");
    // blocked at P
    CHECK_FALSE(validate_counterexample(p, product, {W("abApqPrcs"), l2, {}}));
    // feasible, but P2 is not at its assertion
    CHECK_FALSE(validate_counterexample(p, product, {W("pq"), l2, {}}));
    // not a path of the product
    CHECK_FALSE(validate_counterexample(p, product, {W("rs"), l2, {}}));

    const Program broken = parse_program(slurp("peterson_broken.cprog"));
    const Verdict v = verify(broken);
    REQUIRE(v.outcome == Outcome::Unsafe);
    CHECK(validate_counterexample(broken, compose(broken), *v.counterexample));
    const auto out = execute_trace(broken, broken.trace(v.counterexample->trace));
    REQUIRE(std::holds_alternative<Terminated>(out));
    CHECK(std::get<Terminated>(out).valuation == v.counterexample->final_valuation);
    CHECK_FALSE(evaluate(v.counterexample->violated, v.counterexample->final_valuation));
}

TEST_CASE("each iteration removes its own trace")
{
    for (const auto& [file, expected] : corpus) {
        CAPTURE(file);
        const Program p = parse_program(slurp(file));
        std::vector<std::set<Word>> seen;
        bool repeated = false;
        VerifyConfig cfg;
        cfg.on_iteration = [&](const IterationReport& r) {
            if (seen.size() <= r.group)
                seen.resize(r.group + 1);
            repeated = repeated || !seen[r.group].insert(r.trace).second;
        };
        const Verdict v = verify(p, cfg);
        CHECK(v.outcome == expected);
        CHECK_FALSE(repeated);
    }
}

TEST_CASE("limits give unknown")
{
    const Program p = parse_program(slurp("peterson.cprog"));
    VerifyConfig cfg;
    cfg.max_iterations = 2;
    Verdict v = verify(p, cfg);
    CHECK(v.outcome == Outcome::Unknown);
    CHECK(v.iterations == 2);
    CHECK(v.reason.find("iteration") != std::string::npos);

    cfg = {};
    cfg.product_cap = 5;
    v = verify(p, cfg);
    CHECK(v.outcome == Outcome::Unknown);
    CHECK_FALSE(v.reason.empty());
    CHECK(brute_force_check(p, 5).outcome == Outcome::Unknown);

    cfg = {};
    cfg.subset_cap = 3;
    CHECK(verify(p, cfg).outcome == Outcome::Unknown);
}

TEST_CASE("runs are deterministic")
{
    for (const char* file : {"peterson.cprog", "peterson_swapped.cprog", "time_var_mutex.cprog"}) {
        CAPTURE(file);
        const Program p = parse_program(slurp(file));
        std::vector<std::vector<Word>> traces(2);
        std::vector<Verdict> runs;
        for (int k = 0; k < 2; ++k) {
            VerifyConfig cfg;
            cfg.on_iteration = [&](const IterationReport& r) { traces[k].push_back(r.trace); };
            runs.push_back(verify(p, cfg));
        }
        CHECK(traces[0] == traces[1]);
        CHECK(runs[0].outcome == runs[1].outcome);
        CHECK(runs[0].iterations == runs[1].iterations);
        CHECK(runs[0].counterexample.has_value() == runs[1].counterexample.has_value());
        if (runs[0].counterexample && runs[1].counterexample)
            CHECK(runs[0].counterexample->trace == runs[1].counterexample->trace);
    }
}

TEST_CASE("verdict json")
{
    const Program p = parse_program(slurp("peterson_broken.cprog"));
    const nlohmann::json j = to_json(verify(p));
    CHECK(j["outcome"] == "UNSAFE");
    CHECK(j["counterexample"]["trace"].is_array());
    CHECK(j["counterexample"]["violated"].is_string());
    CHECK(j["assertions"].size() == 2);
    CHECK(j["oracle"]["queries"].get<std::size_t>() > 0);
    CHECK(j["product_states"].get<std::size_t>() == compose(p).tuples.size());
    CHECK(j.contains("seconds"));
}

TEST_CASE("random programs agree with explicit search")
{
    std::mt19937 rng(1);
    std::size_t unsafe = 0;
    std::vector<double> seconds;
    for (int i = 0; i < 120; ++i) {
        const std::string text = random_program_text(rng);
        CAPTURE(text);
        const Program p = parse_program(text);
        const Verdict brute = brute_force_check(p);
        const Verdict v = verify(p);
        REQUIRE(brute.outcome != Outcome::Unknown);
        CHECK(v.outcome == brute.outcome);
        if (v.outcome == Outcome::Unsafe) {
            ++unsafe;
            CHECK(validate_counterexample(p, compose(p), *v.counterexample));
        }
        seconds.push_back(v.seconds);
    }
    std::sort(seconds.begin(), seconds.end());
    CHECK(seconds[seconds.size() / 2] < 5.0);
    CHECK(unsafe > 0);
    CHECK(unsafe < 120);
    MESSAGE("unsafe: " << unsafe << " of 120, median seconds " << seconds[seconds.size() / 2]);
}

TEST_CASE("random program shape")
{
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Program p = parse_program(random_program_text(rng));
        CHECK(p.processes.size() == 2);
        CHECK(p.variables.size() <= 2);
        for (const auto& proc : p.processes) {
            CHECK(proc.states.size() <= 4);
            CHECK(proc.assertions.size() <= 1);
        }
        for (const auto& v : p.variables)
            CHECK(v.domain == std::vector<Int>{0, 1});
    }
}
