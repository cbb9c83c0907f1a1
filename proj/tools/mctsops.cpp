// Command-line front end.
//
//   mctsops [global flags] run
//   mctsops [global flags] baseline <one_shot|cot|self_refine>
//   mctsops [global flags] ablate <no_mcts|no_refine>
//   mctsops [global flags] bench generate
//   mctsops report --in trials.jsonl [--format text|csv|json]
//   mctsops [global flags] replay record --fixture calls.jsonl [--method m]
//   mctsops [global flags] replay verify --fixture calls.jsonl [--method m]

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mctsops/config.hpp"
#include "mctsops/errors.hpp"
#include "mctsops/experiment.hpp"
#include "mctsops/metrics.hpp"

using namespace mctsops;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string backend;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> jobs;
    std::string grader;
    std::string difficulty;
    std::optional<int> count;
    std::optional<int> simulations;
    std::string problems;
    std::string log;
    std::string interpreter;
};

AppConfig resolve(const GlobalFlags& g) {
    AppConfig c = g.config_path.empty() ? AppConfig{} : load_config(g.config_path);
    if (!g.backend.empty()) {
        c.backend = parse_backend_kind(g.backend);
    }
    if (g.seed) {
        c.synthetic.seed = *g.seed;
        c.bench.seed = *g.seed;
        c.experiment.search.rng_seed = *g.seed;
    }
    if (g.jobs) {
        if (*g.jobs < 1) {
            throw ConfigError("--jobs must be at least 1");
        }
        c.experiment.jobs = *g.jobs;
    }
    if (!g.grader.empty()) {
        c.experiment.grader = parse_grader_kind(g.grader);
    }
    if (!g.difficulty.empty()) {
        c.bench.difficulty = parse_difficulty(g.difficulty);
    }
    if (g.count) {
        if (*g.count < 1) {
            throw ConfigError("--count must be at least 1");
        }
        c.bench.count = *g.count;
    }
    if (g.simulations) {
        c.experiment.search.simulations = *g.simulations;
        c.experiment.search.validate();
    }
    if (!g.problems.empty()) {
        c.bench.problems_path = g.problems;
    }
    if (!g.interpreter.empty()) {
        c.sandbox.interpreter_cmd = g.interpreter;
    }
    return c;
}

std::vector<BenchProblem> problems_for(const AppConfig& c) {
    if (!c.bench.problems_path.empty()) {
        return read_problem_set(c.bench.problems_path);
    }
    return generate_set(c.bench.difficulty, c.bench.count, c.bench.seed, c.bench.n_users);
}

const TemplateSet& templates_for(const AppConfig& c, std::optional<TemplateSet>& storage) {
    if (c.templates_dir.empty()) {
        return TemplateSet::defaults();
    }
    storage = TemplateSet::load(c.templates_dir);
    return *storage;
}

void write_records(const std::string& path, const std::vector<TrialRecord>& records) {
    if (path.empty()) {
        return;
    }
    std::filesystem::remove(path);
    append_trials(path, records);
}

std::vector<TrialRecord> execute(Method method, const AppConfig& c, LlmBackend& backend, RunLog* log) {
    const Sandbox sandbox(c.sandbox);
    std::optional<TemplateSet> storage;
    const TrialContext ctx{backend, sandbox, templates_for(c, storage), log};
    return run_method(method, problems_for(c), c.experiment, ctx);
}

int run_trials(Method method, const GlobalFlags& g) {
    const AppConfig c = resolve(g);
    auto backend = make_backend(c);
    std::optional<RunLog> log;
    if (!g.log.empty()) {
        log.emplace(g.log);
    }
    const auto records = execute(method, c, *backend, log ? &*log : nullptr);
    write_records(g.out, records);
    std::cout << emit_report(aggregate(records), ReportFormat::text);
    return 0;
}

bool same_outcome(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].problem_id != b[i].problem_id || a[i].code != b[i].code || a[i].reward != b[i].reward ||
            a[i].prompt_tokens != b[i].prompt_tokens || a[i].completion_tokens != b[i].completion_tokens ||
            a[i].executed_ok != b[i].executed_ok || a[i].optimal != b[i].optimal) {
            std::cerr << "mismatch on " << a[i].problem_id << "\n";
            return false;
        }
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-searched prompt pipelines for optimization code generation"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--backend", g.backend, "http, replay or synthetic");
    app.add_option("--seed", g.seed, "Seed for the synthetic channel, problem generation and search");
    app.add_option("--out", g.out, "Output path");
    app.add_option("--jobs", g.jobs, "Problems run in parallel");
    app.add_option("--grader", g.grader, "llm or oracle");
    app.add_option("--difficulty", g.difficulty, "easy or hard");
    app.add_option("--count", g.count, "Number of generated problems");
    app.add_option("--simulations", g.simulations, "Search simulations per problem");
    app.add_option("--problems", g.problems, "Problem set (JSONL) instead of a generated one");
    app.add_option("--log", g.log, "Append per-iteration telemetry to this JSONL file");
    app.add_option("--interpreter", g.interpreter, "Interpreter command line for the sandbox");

    auto* run = app.add_subcommand("run", "Tree search over a problem set");

    std::string method_name;
    auto* baseline = app.add_subcommand("baseline", "Run a baseline method");
    baseline->add_option("method", method_name, "one_shot, cot or self_refine")->required();

    std::string mode_name;
    auto* ablation = app.add_subcommand("ablate", "Run the search with one module disabled");
    ablation->add_option("mode", mode_name, "no_mcts or no_refine")->required();

    auto* bench = app.add_subcommand("bench", "Problem sets");
    bench->require_subcommand(1);
    auto* generate = bench->add_subcommand("generate", "Write a generated problem set as JSONL");

    std::string report_in;
    std::string report_format = "text";
    auto* report = app.add_subcommand("report", "Aggregate trial records");
    report->add_option("--in", report_in, "Trial records (JSONL)")->required()->check(CLI::ExistingFile);
    report->add_option("--format", report_format, "text, csv or json");

    std::string fixture;
    std::string replay_method = "mcts_ops";
    auto* replay = app.add_subcommand("replay", "Record or verify gateway fixtures");
    replay->require_subcommand(1);
    auto* record = replay->add_subcommand("record", "Run with every call recorded to a fixture");
    auto* verify = replay->add_subcommand("verify", "Replay a fixture twice and compare the outcomes");
    for (auto* sub : {record, verify}) {
        sub->add_option("--fixture", fixture, "Fixture file (JSONL)")->required();
        sub->add_option("--method", replay_method, "Method to run");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_trials(Method::mcts_ops, g);
        }
        if (baseline->parsed()) {
            const Method m = parse_method(method_name);
            if (m != Method::one_shot && m != Method::cot && m != Method::self_refine) {
                throw ConfigError("not a baseline method: " + method_name);
            }
            return run_trials(m, g);
        }
        if (ablation->parsed()) {
            const AblationMode mode = parse_ablation_mode(mode_name);
            const AppConfig c = resolve(g);
            auto backend = make_backend(c);
            const Sandbox sandbox(c.sandbox);
            std::optional<TemplateSet> storage;
            std::optional<RunLog> log;
            if (!g.log.empty()) {
                log.emplace(g.log);
            }
            std::vector<TrialRecord> records;
            const auto table = ablate(mode, problems_for(c), c.experiment,
                                      TrialContext{*backend, sandbox, templates_for(c, storage), log ? &*log : nullptr},
                                      &records);
            write_records(g.out, records);
            std::cout << emit_report(table, ReportFormat::text);
            return 0;
        }
        if (generate->parsed()) {
            const AppConfig c = resolve(g);
            const auto problems = generate_set(c.bench.difficulty, c.bench.count, c.bench.seed, c.bench.n_users);
            if (g.out.empty()) {
                throw ConfigError("bench generate needs --out");
            }
            write_problem_set(g.out, problems);
            std::cout << problems.size() << " problems written to " << g.out << "\n";
            return 0;
        }
        if (report->parsed()) {
            resolve(g);
            const auto text = emit_report(aggregate(read_trials(report_in)), parse_report_format(report_format));
            if (g.out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(g.out, std::ios::binary) << text;
            }
            return 0;
        }
        if (record->parsed()) {
            const AppConfig c = resolve(g);
            auto inner = make_backend(c);
            std::filesystem::remove(fixture);
            RecordingBackend recorder(*inner, fixture);
            const auto records = execute(parse_method(replay_method), c, recorder, nullptr);
            write_records(g.out, records);
            std::cout << emit_report(aggregate(records), ReportFormat::text);
            return 0;
        }
        if (verify->parsed()) {
            AppConfig c = resolve(g);
            c.backend = BackendKind::replay;
            c.fixture_path = fixture;
            const Method m = parse_method(replay_method);
            auto replay_backend = ReplayBackend::from_file(fixture);
            const auto first = execute(m, c, *replay_backend, nullptr);
            replay_backend->reset();
            const auto second = execute(m, c, *replay_backend, nullptr);
            write_records(g.out, first);
            if (!same_outcome(first, second)) {
                std::cout << "replay diverged\n";
                return 1;
            }
            std::cout << "replay identical over " << first.size() << " problems\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
