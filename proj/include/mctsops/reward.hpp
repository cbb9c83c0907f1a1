#pragma once

// Turns an execution outcome into a scalar reward in {-1} U [0, 10].
// Execution failure always scores -1; executed scripts are graded either by
// the evaluator role or by the deterministic oracle grader.

#include <memory>
#include <optional>
#include <string>

#include "mctsops/benchgen.hpp"
#include "mctsops/grading.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/prompts.hpp"
#include "mctsops/sandbox.hpp"

namespace mctsops {

inline constexpr double kFailureReward = -1.0;

struct RewardReport {
    double reward = kFailureReward;
    bool executed_ok = false;
    std::optional<bool> feasible;
    std::optional<double> objective_value;
    std::optional<bool> optimal;
    std::string rationale;
};

RewardReport llm_reward(const ExecutionResult& exec, std::string_view problem_text, LlmSession& session,
                        const TemplateSet& templates = TemplateSet::defaults());

RewardReport oracle_reward(const ExecutionResult& exec, const ProblemSpec& spec,
                           const std::optional<GroundTruth>& truth, double grading_eps = kGradingEps);

bool is_optimal(const RewardReport& report);

// A grader bound to one problem. Every pipeline grades through this interface
// so that all methods share one grading path.
class Grader {
public:
    virtual ~Grader() = default;
    virtual RewardReport grade(const ExecutionResult& exec, LlmSession& session) = 0;
};

class LlmGrader final : public Grader {
public:
    // `truth` is optional; when present the optimality verdict is attached
    // from the oracle without affecting the reward.
    LlmGrader(ProblemSpec spec, std::optional<GroundTruth> truth,
              const TemplateSet& templates = TemplateSet::defaults());
    RewardReport grade(const ExecutionResult& exec, LlmSession& session) override;

private:
    ProblemSpec spec_;
    std::optional<GroundTruth> truth_;
    const TemplateSet& templates_;
};

class OracleGrader final : public Grader {
public:
    OracleGrader(ProblemSpec spec, std::optional<GroundTruth> truth, double grading_eps = kGradingEps);
    RewardReport grade(const ExecutionResult& exec, LlmSession& session) override;

private:
    ProblemSpec spec_;
    std::optional<GroundTruth> truth_;
    double grading_eps_;
};

enum class GraderKind { llm, oracle };
GraderKind parse_grader_kind(std::string_view text);

std::unique_ptr<Grader> make_grader(GraderKind kind, const BenchProblem& problem,
                                    const TemplateSet& templates = TemplateSet::defaults());

}  // namespace mctsops
