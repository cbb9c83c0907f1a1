#include "mctsops/reward.hpp"

#include "mctsops/errors.hpp"
#include "mctsops/util.hpp"

namespace mctsops {

RewardReport llm_reward(const ExecutionResult& exec, std::string_view problem_text, LlmSession& session,
                        const TemplateSet& templates) {
    RewardReport report;
    if (!exec.ok()) {
        report.reward = kFailureReward;
        report.executed_ok = false;
        report.rationale = "execution failed (" + std::string(to_string(exec.status)) + ")";
        return report;
    }
    report.executed_ok = true;
    LlmRequest request = requests::evaluate(templates, problem_text, exec);
    for (int attempt = 0; attempt < 2; ++attempt) {
        request.sample = attempt;
        const LlmResponse reply = session.complete(request);
        report.rationale = reply.text;
        try {
            report.reward = parse_bounded_number(reply.text, 0.0, 10.0, true);
            return report;
        } catch (const ParseFailure&) {
        }
    }
    report.reward = 0.0;
    return report;
}

RewardReport oracle_reward(const ExecutionResult& exec, const ProblemSpec& spec,
                           const std::optional<GroundTruth>& truth, double grading_eps) {
    if (!truth || !truth->feasible) {
        throw OracleUnavailable("no ground truth for problem " + spec.id);
    }
    RewardReport report;
    if (!exec.ok()) {
        report.reward = kFailureReward;
        report.executed_ok = false;
        report.optimal = false;
        report.rationale = "execution failed (" + std::string(to_string(exec.status)) + ")";
        return report;
    }
    report.executed_ok = true;
    const auto powers = parse_powers(exec.stdout_text, spec.n_users);
    if (!powers) {
        report.reward = 0.0;
        report.optimal = false;
        report.rationale = "no transmit powers found in output";
        return report;
    }
    const Assessment a = assess(spec, *powers, grading_eps);
    report.objective_value = a.objective;
    report.feasible = a.feasible;
    if (!a.feasible) {
        report.reward = 0.0;
        report.optimal = false;
        report.rationale = "infeasible: " + std::to_string(a.violations.size()) + " constraint(s) violated";
        return report;
    }
    const double gap = relative_gap(a.objective, truth->objective);
    report.reward = rubric_reward(gap);
    report.optimal = gap <= kOptimalityGap;
    report.rationale = "feasible, total power " + format_shortest(a.objective) + " W vs optimum " +
                       format_shortest(truth->objective) + " W";
    return report;
}

bool is_optimal(const RewardReport& report) {
    return report.executed_ok && report.optimal.value_or(false);
}

LlmGrader::LlmGrader(ProblemSpec spec, std::optional<GroundTruth> truth, const TemplateSet& templates)
    : spec_(std::move(spec)), truth_(std::move(truth)), templates_(templates) {}

RewardReport LlmGrader::grade(const ExecutionResult& exec, LlmSession& session) {
    RewardReport report = llm_reward(exec, spec_.description, session, templates_);
    if (report.executed_ok && truth_ && truth_->feasible) {
        const RewardReport verdict = oracle_reward(exec, spec_, truth_);
        report.feasible = verdict.feasible;
        report.objective_value = verdict.objective_value;
        report.optimal = verdict.optimal;
    }
    return report;
}

OracleGrader::OracleGrader(ProblemSpec spec, std::optional<GroundTruth> truth, double grading_eps)
    : spec_(std::move(spec)), truth_(std::move(truth)), grading_eps_(grading_eps) {}

RewardReport OracleGrader::grade(const ExecutionResult& exec, LlmSession&) {
    return oracle_reward(exec, spec_, truth_, grading_eps_);
}

GraderKind parse_grader_kind(std::string_view text) {
    if (text == "llm") {
        return GraderKind::llm;
    }
    if (text == "oracle") {
        return GraderKind::oracle;
    }
    throw ConfigError("unknown grader '" + std::string(text) + "'");
}

std::unique_ptr<Grader> make_grader(GraderKind kind, const BenchProblem& problem, const TemplateSet& templates) {
    if (kind == GraderKind::llm) {
        return std::make_unique<LlmGrader>(problem.spec, problem.truth, templates);
    }
    return std::make_unique<OracleGrader>(problem.spec, problem.truth);
}

}  // namespace mctsops
