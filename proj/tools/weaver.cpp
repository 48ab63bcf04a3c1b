#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "weaver/errors.hpp"
#include "weaver/verifier.hpp"

namespace fs = std::filesystem;
using namespace weaver;

namespace {

constexpr int exit_safe = 0;
constexpr int exit_unsafe = 1;
constexpr int exit_unknown = 2;
constexpr int exit_usage = 64;
constexpr int exit_data = 65;
constexpr int exit_no_input = 66;

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string oracle = "finite";
    std::string smt_cmd;
    std::size_t max_iters = VerifyConfig{}.max_iterations;
    std::size_t product_cap = VerifyConfig{}.product_cap;
    std::size_t subset_cap = VerifyConfig{}.subset_cap;
    std::string dot_dir;
    std::string stats_json;
    std::string label_order;

    VerifyConfig config() const
    {
        VerifyConfig cfg;
        cfg.max_iterations = max_iters;
        cfg.product_cap = product_cap;
        cfg.subset_cap = subset_cap;
        if (oracle == "smt") {
            cfg.oracle.mode = OracleConfig::Mode::ExternalSmt;
            if (!smt_cmd.empty())
                cfg.oracle.solver_command = smt_cmd;
            else if (const char* env = std::getenv("WEAVER_SMT_CMD"))
                cfg.oracle.solver_command = env;
        }
        return cfg;
    }
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FileError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw FileError("cannot write " + path.string());
    out << text;
}

fs::path output_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw FileError("cannot create directory " + dir);
    return dir;
}

/// "a,b,c" splits on commas; otherwise one label per character when every
/// character is a label, else the whole string is one label.
Word split_labels(const std::string& text, const Program& p)
{
    Word w;
    if (text.find(',') != std::string::npos) {
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ',');)
            if (!part.empty())
                w.push_back(part);
    } else if (std::all_of(text.begin(), text.end(), [&](char c) {
                   return std::find(p.labels.begin(), p.labels.end(), std::string(1, c)) != p.labels.end();
               })) {
        for (char c : text)
            w.push_back(std::string(1, c));
    } else if (!text.empty()) {
        w.push_back(text);
    }
    for (const auto& l : w)
        if (std::find(p.labels.begin(), p.labels.end(), l) == p.labels.end())
            throw UsageError("unknown label '" + l + "'");
    return w;
}

Program load(const std::string& path, const Options& opt)
{
    Program p = parse_program(read_file(path));
    if (!opt.label_order.empty())
        p.set_label_order(split_labels(opt.label_order, p));
    return p;
}

std::string owner_of(const Program& p, const std::string& label)
{
    for (const auto& proc : p.processes)
        for (const auto& t : proc.transitions)
            if (t.op.label == label)
                return proc.name;
    return "?";
}

std::string join(const Word& w)
{
    std::string s;
    for (const auto& l : w)
        s += (s.empty() || l.size() == 1 ? "" : ",") + l;
    return s;
}

void print_valuation(std::ostream& os, const Valuation& v)
{
    bool first = true;
    for (const auto& [name, value] : v) {
        os << (first ? "" : ", ") << name << "=" << value;
        first = false;
    }
}

int exit_code(Outcome o)
{
    switch (o) {
    case Outcome::Safe: return exit_safe;
    case Outcome::Unsafe: return exit_unsafe;
    case Outcome::Unknown: return exit_unknown;
    }
    return exit_unknown;
}

int run_verify(const std::string& path, const Options& opt)
{
    const Program p = load(path, opt);
    VerifyConfig cfg = opt.config();
    if (!opt.dot_dir.empty()) {
        const fs::path dir = output_dir(opt.dot_dir);
        cfg.on_iteration = [dir](const IterationReport& r) {
            std::ostringstream name;
            name << "iter" << std::setw(4) << std::setfill('0') << r.iteration;
            const ProofAfa& proof = r.stages->widened;
            write_file(dir / (name.str() + ".dot"), to_dot(proof, name.str()));
            write_file(dir / (name.str() + ".json"), to_json(proof).dump(2) + "\n");
        };
    }
    const Verdict v = verify(p, cfg);
    std::cout << to_string(v.outcome);
    switch (v.outcome) {
    case Outcome::Safe:
        std::cout << " after " << v.iterations << " iteration" << (v.iterations == 1 ? "" : "s") << "\n";
        break;
    case Outcome::Unsafe: {
        const auto& cx = *v.counterexample;
        std::cout << ": " << cx.violated.to_string() << " fails after " << join(cx.trace) << "\n";
        for (std::size_t i = 0; i < cx.trace.size(); ++i)
            std::cout << "  " << std::setw(3) << i + 1 << "  " << std::left << std::setw(6)
                      << owner_of(p, cx.trace[i]) << std::right << p.operation(cx.trace[i]).to_string() << "\n";
        std::cout << "  final: ";
        print_valuation(std::cout, cx.final_valuation);
        std::cout << "\n";
        break;
    }
    case Outcome::Unknown:
        std::cout << ": " << v.reason << "\n";
        break;
    }
    if (!opt.stats_json.empty())
        write_file(opt.stats_json, to_json(v).dump(2) + "\n");
    return exit_code(v.outcome);
}

Formula pick_assertion(const Program& p, const std::string& which)
{
    for (const auto& proc : p.processes) {
        if (proc.name != which)
            continue;
        std::vector<Formula> found;
        for (const auto& [state, f] : proc.assertions)
            if (std::find(found.begin(), found.end(), f) == found.end())
                found.push_back(f);
        if (found.size() != 1)
            throw UsageError("process " + which + " has " + std::to_string(found.size()) +
                             " distinct assertions; pass a formula instead");
        return found.front();
    }
    try {
        return parse_formula(which);
    } catch (const ParseError&) {
        throw UsageError("'" + which + "' is neither a process name nor a formula");
    }
}

int run_inspect(const std::string& path, const std::string& trace, const std::string& which, const Options& opt)
{
    const Program p = load(path, opt);
    const Word labels = split_labels(trace, p);
    const Formula psi = pick_assertion(p, which);
    Oracle oracle(p.domains(), opt.config().oracle);
    const ProofStages st = prove_trace(p, p.trace(labels), psi, oracle);

    std::cout << to_dot(st.annotated, "annotated");
    std::cerr << "trace " << join(labels) << ", postcondition " << negate(psi).to_string() << ": "
              << st.built.size() << " states, HMap(s0) = " << st.annotated.hmap[0]->to_string() << "\n";
    if (st.refuted)
        std::cerr << "I && HMap(s0) is satisfiable; the trace can violate " << psi.to_string() << "\n";
    else
        std::cerr << "sliced " << st.sliced.sliced.size() << ", converted " << st.split.converted.size()
                  << ", edges added " << st.widened.edges_added << "\n";

    if (!opt.dot_dir.empty()) {
        const fs::path dir = output_dir(opt.dot_dir);
        std::vector<std::pair<std::string, const ProofAfa*>> stages = {{"1-built", &st.built},
                                                                       {"2-annotated", &st.annotated}};
        if (!st.refuted) {
            stages.emplace_back("3-sliced", &st.sliced);
            stages.emplace_back("4-split", &st.split);
            stages.emplace_back("5-widened", &st.widened);
        }
        for (const auto& [name, proof] : stages) {
            write_file(dir / (name + ".dot"), to_dot(*proof, name));
            write_file(dir / (name + ".json"), to_json(*proof).dump(2) + "\n");
        }
        if (!st.refuted) {
            write_file(dir / "6-epsilon-free.dot", to_dot(st.epsilon_free, "epsilon-free"));
            write_file(dir / "6-epsilon-free.json", to_json(st.epsilon_free).dump(2) + "\n");
        }
    }
    if (!opt.stats_json.empty())
        write_file(opt.stats_json, to_json(st.refuted ? st.annotated : st.widened).dump(2) + "\n");
    return st.refuted ? exit_unsafe : exit_safe;
}

int run_bench(std::vector<std::string> files, const std::string& corpus_dir, const Options& opt)
{
    if (files.empty()) {
        if (!fs::is_directory(corpus_dir))
            throw FileError("no corpus directory " + corpus_dir);
        for (const auto& e : fs::directory_iterator(corpus_dir))
            if (e.path().extension() == ".cprog")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
    }
    nlohmann::json rows = nlohmann::json::array();
    std::cout << std::left << std::setw(30) << "Program" << std::right << std::setw(10) << "Verdict" << std::setw(10)
              << "Time (s)" << std::setw(7) << "Iters" << std::setw(9) << "Product" << std::setw(9) << "Proof"
              << std::setw(11) << "Explicit" << "\n";
    int status = 0;
    for (const auto& f : files) {
        const Program p = load(f, opt);
        const Verdict v = verify(p, opt.config());
        const Verdict b = brute_force_check(p, opt.product_cap);
        std::size_t proof_states = 0;
        for (const auto& a : v.assertions)
            proof_states += a.proof_states;
        const std::string name = fs::path(f).stem().string();
        std::ostringstream t;
        t << std::fixed << std::setprecision(3) << v.seconds;
        std::cout << std::left << std::setw(30) << name << std::right << std::setw(10) << to_string(v.outcome)
                  << std::setw(10) << t.str() << std::setw(7) << v.iterations << std::setw(9) << v.product_states
                  << std::setw(9) << proof_states << std::setw(11) << to_string(b.outcome) << "\n";
        if (v.outcome != b.outcome)
            status = exit_unknown;
        nlohmann::json row = to_json(v);
        row["program"] = f;
        row["explicit"] = to_string(b.outcome);
        rows.push_back(row);
    }
    if (!opt.stats_json.empty())
        write_file(opt.stats_json, rows.dump(2) + "\n");
    return status;
}

int run_selftest(std::size_t count, unsigned seed, const Options& opt)
{
    std::mt19937 rng(seed);
    std::size_t agree = 0, unknown = 0, wrong = 0, unsafe = 0;
    std::vector<double> seconds;
    for (std::size_t i = 0; i < count; ++i) {
        const std::string text = random_program_text(rng);
        const Program p = parse_program(text);
        const Verdict b = brute_force_check(p, opt.product_cap);
        const Verdict v = verify(p, opt.config());
        seconds.push_back(v.seconds);
        bool ok = v.outcome == b.outcome;
        if (ok && v.outcome == Outcome::Unsafe) {
            ++unsafe;
            ok = validate_counterexample(p, compose(p), *v.counterexample);
        }
        if (ok) {
            ++agree;
            continue;
        }
        (v.outcome == Outcome::Unknown ? unknown : wrong) += 1;
        std::cout << "program " << i << ": verify " << to_string(v.outcome) << ", explicit " << to_string(b.outcome)
                  << (v.reason.empty() ? "" : " (" + v.reason + ")") << "\n"
                  << text;
    }
    std::sort(seconds.begin(), seconds.end());
    const double median = seconds.empty() ? 0 : seconds[seconds.size() / 2];
    std::cout << agree << "/" << count << " agree (" << unsafe << " unsafe), " << wrong << " wrong, " << unknown
              << " unknown, median " << median << " s\n";
    return wrong + unknown == 0 ? exit_safe : exit_unsafe;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Proof-automaton safety verifier for finite-state concurrent programs"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--oracle", opt.oracle, "Decision procedure")->check(CLI::IsMember({"finite", "smt"}));
    app.add_option("--smt-cmd", opt.smt_cmd, "SMT-LIB2 solver command (default: $WEAVER_SMT_CMD or 'z3 -in')");
    app.add_option("--max-iters", opt.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
    app.add_option("--product-cap", opt.product_cap, "Bound on product states")->check(CLI::PositiveNumber);
    app.add_option("--subset-cap", opt.subset_cap, "Bound on subset states per search")->check(CLI::PositiveNumber);
    app.add_option("--dot-dir", opt.dot_dir, "Directory for DOT and JSON exports");
    app.add_option("--stats-json", opt.stats_json, "Write statistics as JSON");
    app.add_option("--label-order", opt.label_order, "Label order for trace selection");

    std::string file;
    auto* verify_cmd = app.add_subcommand("verify", "Check every assertion of a program");
    verify_cmd->add_option("file", file, "Program file")->required();

    std::string trace, which;
    auto* inspect_cmd = app.add_subcommand("inspect", "Show the proof automaton of one trace");
    inspect_cmd->add_option("file", file, "Program file")->required();
    inspect_cmd->add_option("--trace", trace, "Labels, one per character or comma separated")->required();
    inspect_cmd->add_option("--assert", which, "Process whose assertion to use, or a formula")->required();

    std::vector<std::string> files;
    std::string corpus_dir = WEAVER_CORPUS_DIR;
    auto* bench_cmd = app.add_subcommand("bench", "Verify a set of programs and print a table");
    bench_cmd->add_option("files", files, "Programs (default: the corpus)");
    bench_cmd->add_option("--corpus", corpus_dir, "Corpus directory");

    std::size_t count = 120;
    unsigned seed = 1;
    auto* selftest_cmd = app.add_subcommand("selftest", "Compare against explicit search on random programs");
    selftest_cmd->add_option("--count", count, "Number of programs")->check(CLI::PositiveNumber);
    selftest_cmd->add_option("--seed", seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : exit_usage;
    }

    try {
        if (*verify_cmd)
            return run_verify(file, opt);
        if (*inspect_cmd)
            return run_inspect(file, trace, which, opt);
        if (*bench_cmd)
            return run_bench(files, corpus_dir, opt);
        return run_selftest(count, seed, opt);
    } catch (const FileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_no_input;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ParseError& e) {
        std::cerr << file << ":" << e.what() << "\n";
        return exit_data;
    } catch (const SemanticError& e) {
        std::cerr << file << ": " << e.what() << "\n";
        return exit_data;
    } catch (const CapExceeded& e) {
        std::cerr << "unknown: " << e.what() << "\n";
        return exit_unknown;
    } catch (const SolverFailure& e) {
        std::cerr << "unknown: " << e.what() << "\n";
        return exit_unknown;
    }
}
