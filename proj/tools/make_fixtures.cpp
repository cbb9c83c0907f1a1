// Regenerates the recorded fixtures under tests/fixtures from the synthetic
// backend. Usage: make_fixtures <output-dir>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "mctsops/baselines.hpp"
#include "mctsops/benchgen.hpp"
#include "mctsops/pipeline.hpp"
#include "mctsops/refine.hpp"
#include "mctsops/reward.hpp"
#include "mctsops/sandbox.hpp"

using namespace mctsops;
namespace fs = std::filesystem;

namespace {

SandboxConfig sandbox_config() {
    SandboxConfig c;
    c.interpreter_cmd = "python3 -I -S";
    c.limits.timeout_s = 10.0;
    return c;
}

std::string fresh(const fs::path& dir, const std::string& name) {
    const fs::path p = dir / name;
    fs::remove(p);
    return p.string();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

LlmGrader grader_for(const ProblemSpec& spec) {
    return LlmGrader(spec, solve_ground_truth(spec));
}

nlohmann::json trial_summary(const TrialRecord& t) {
    return {{"reward", t.reward},          {"executed_ok", t.executed_ok},
            {"optimal", t.optimal},        {"prompt_tokens", t.prompt_tokens},
            {"completion_tokens", t.completion_tokens}, {"retries", t.retries},
            {"code", t.code}};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output-dir>\n";
        return 2;
    }
    const fs::path dir = argv[1];
    fs::create_directories(dir);
    const Sandbox sandbox(sandbox_config());
    const auto easy = example_easy_problem();
    const auto hard = example_hard_problem();
    nlohmann::json expected;

    {
        SyntheticBackend synthetic({.seed = 0});
        RecordingBackend rec(synthetic, fresh(dir, "decompose_easy.jsonl"));
        LlmSession session(rec);
        decompose(easy.description, 8, session);
    }

    // Five tree-search iterations per example problem, evaluator-graded.
    for (const auto& [name, spec] : {std::pair{"easy", easy}, std::pair{"hard", hard}}) {
        SyntheticBackend synthetic({.seed = 2024});
        RecordingBackend rec(synthetic, fresh(dir, std::string("mcts_") + name + ".jsonl"));
        LlmSession session(rec);
        auto grader = grader_for(spec);
        SearchConfig search;
        search.simulations = 5;
        const auto out = run_search(spec, search, RefineConfig{}, SearchContext{session, sandbox, grader});
        nlohmann::json rewards = nlohmann::json::array();
        for (const auto& r : out.per_iteration) {
            rewards.push_back(r.reward);
        }
        expected["mcts"][name] = {{"best_code", out.best_code},
                                  {"best_reward", out.best_reward},
                                  {"rewards", rewards},
                                  {"prompt_tokens", session.prompt_tokens()},
                                  {"completion_tokens", session.completion_tokens()}};
    }

    // A clean one-shot script for the easy problem with one closing bracket removed.
    {
        SyntheticBackend clean({.seed = 0, .defect_scale = 0.0});
        LlmSession session(clean);
        auto code = strip_code_fences(session.complete(requests::full_script(TemplateSet::defaults(), easy.description, "", 0)).text);
        const auto pos = code.find(']');
        code.erase(pos, 1);
        write_text(dir / "refine_syntax.py", code);

        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            SyntheticBackend synthetic({.seed = seed});
            const std::string path = fresh(dir, "refine_syntax.jsonl");
            RecordingBackend rec(synthetic, path);
            LlmSession s(rec);
            auto grader = grader_for(easy);
            ScoredScript initial;
            initial.code = code;
            initial.exec = sandbox.execute(code);
            initial.report = grader.grade(initial.exec, s);
            const auto out = refine_loop(initial, RefineConfig{}, RefineContext{easy.description, grader, s, sandbox});
            if (out.best.exec.ok() && out.retries_used >= 1) {
                expected["refine"] = {{"seed", seed},
                                      {"retries_used", out.retries_used},
                                      {"reward", out.best.report.reward},
                                      {"code", out.best.code}};
                break;
            }
        }
    }

    // Baselines: an optimal one-shot on the easy example, reasoning-guided on the
    // hard example, and self-refine recovering from a script that fails to run.
    {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            SyntheticBackend synthetic({.seed = seed});
            RecordingBackend rec(synthetic, fresh(dir, "one_shot_easy.jsonl"));
            auto grader = grader_for(easy);
            const auto t = one_shot(easy, grader, TrialContext{rec, sandbox});
            if (t.reward == 10.0) {
                expected["one_shot_easy"] = trial_summary(t);
                break;
            }
        }
        {
            SyntheticBackend synthetic({.seed = 5});
            RecordingBackend rec(synthetic, fresh(dir, "cot_hard.jsonl"));
            auto grader = grader_for(hard);
            expected["cot_hard"] = trial_summary(chain_of_thought(hard, grader, TrialContext{rec, sandbox}));
        }
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            SyntheticBackend probe({.seed = seed});
            auto g0 = grader_for(hard);
            if (one_shot(hard, g0, TrialContext{probe, sandbox}).executed_ok) {
                continue;
            }
            SyntheticBackend synthetic({.seed = seed});
            RecordingBackend rec(synthetic, fresh(dir, "self_refine_hard.jsonl"));
            auto grader = grader_for(hard);
            const auto t = self_refine(hard, grader, RefineConfig{}, TrialContext{rec, sandbox});
            if (t.executed_ok) {
                expected["self_refine_hard"] = trial_summary(t);
                break;
            }
        }
    }

    write_text(dir / "expected.json", expected.dump(2) + "\n");
    std::cout << "fixtures written to " << dir << "\n";
    return 0;
}
