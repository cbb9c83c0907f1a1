#pragma once

// One-shot, chain-of-thought and self-refine pipelines, plus the trial record
// every method (tree search included) reports into.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mctsops/benchgen.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/pipeline.hpp"
#include "mctsops/prompts.hpp"
#include "mctsops/refine.hpp"
#include "mctsops/reward.hpp"
#include "mctsops/sandbox.hpp"

namespace mctsops {

enum class Method { mcts_ops, one_shot, cot, self_refine, no_mcts, no_refine };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct TrialRecord {
    Method method = Method::one_shot;
    std::string problem_id;
    Difficulty difficulty = Difficulty::easy;
    bool executed_ok = false;
    double reward = kFailureReward;
    bool optimal = false;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    double wall_time_s = 0.0;
    int retries = 0;
    std::string code;
    std::string error;

    std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
};

nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const nlohmann::json& j);
void append_trials(const std::string& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trials(const std::string& path);

// Shared per-trial plumbing. Each trial opens its own LlmSession on `backend`,
// so the token fields of a record are exactly that trial's usage.
struct TrialContext {
    LlmBackend& backend;
    const Sandbox& sandbox;
    const TemplateSet& templates = TemplateSet::defaults();
    RunLog* log = nullptr;
};

TrialRecord one_shot(const ProblemSpec& problem, Grader& grader, TrialContext ctx);
TrialRecord chain_of_thought(const ProblemSpec& problem, Grader& grader, TrialContext ctx);
// One-shot followed by the refine loop with `refine.max_retries` retries.
TrialRecord self_refine(const ProblemSpec& problem, Grader& grader, const RefineConfig& refine, TrialContext ctx);

// Tree search (or its greedy / no-refine ablations) wrapped as a trial.
TrialRecord search_trial(const ProblemSpec& problem, Grader& grader, const SearchConfig& search,
                         const RefineConfig& refine, TrialContext ctx, Method label = Method::mcts_ops,
                         PipelineOptions options = {});

}  // namespace mctsops
