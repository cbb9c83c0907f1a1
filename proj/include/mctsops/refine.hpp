#pragma once

// Bounded feedback-and-revise loop for a completed script whose reward falls
// below a threshold.

#include <string>

#include "mctsops/llm_gateway.hpp"
#include "mctsops/prompts.hpp"
#include "mctsops/reward.hpp"
#include "mctsops/sandbox.hpp"

namespace mctsops {

struct RefineConfig {
    int max_retries = 3;
    double tau = 7.0;
    bool enabled = true;

    void validate() const;
};

struct ScoredScript {
    std::string code;
    ExecutionResult exec;
    RewardReport report;
};

struct RefineOutcome {
    ScoredScript best;
    int retries_used = 0;
};

struct RefineContext {
    std::string_view problem_text;
    Grader& grader;
    LlmSession& session;
    const Sandbox& sandbox;
    const TemplateSet& templates = TemplateSet::defaults();
    // Offset for the revision requests' sample index.
    int sample_base = 0;
};

// Each retry asks the feedback role what is wrong, asks the code writer for a
// full revised script, runs it and grades it. Continues from the latest
// revision while its reward is below tau and retries remain, and returns the
// best script seen (the input included). A gateway failure ends the loop
// early with the best-so-far result.
RefineOutcome refine_loop(ScoredScript initial, const RefineConfig& cfg, RefineContext ctx);

}  // namespace mctsops
