#pragma once

// Runs a method over a problem set (optionally in parallel) and the two
// module-disabling ablations.

#include <vector>

#include "mctsops/baselines.hpp"
#include "mctsops/metrics.hpp"

namespace mctsops {

struct ExperimentConfig {
    SearchConfig search;
    RefineConfig refine;
    GraderKind grader = GraderKind::llm;
    PipelineOptions pipeline;
    int jobs = 1;
};

// One record per problem, in problem order regardless of `jobs`.
std::vector<TrialRecord> run_method(Method method, const std::vector<BenchProblem>& problems,
                                    const ExperimentConfig& config, TrialContext ctx);

enum class AblationMode { no_mcts, no_refine };
AblationMode parse_ablation_mode(std::string_view text);
Method method_for(AblationMode mode);

// no_mcts: greedy linear pipeline with refinement kept.
// no_refine: full search with refinement disabled.
MetricsTable ablate(AblationMode mode, const std::vector<BenchProblem>& problems, const ExperimentConfig& config,
                    TrialContext ctx, std::vector<TrialRecord>* records = nullptr);

}  // namespace mctsops
