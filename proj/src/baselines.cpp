#include "mctsops/baselines.hpp"

#include <chrono>
#include <fstream>

#include "mctsops/errors.hpp"
#include "mctsops/util.hpp"

namespace mctsops {
namespace {

using Clock = std::chrono::steady_clock;

struct Trial {
    TrialRecord record;
    LlmSession session;
    Clock::time_point start = Clock::now();

    Trial(Method method, const ProblemSpec& problem, LlmBackend& backend) : session(backend) {
        record.method = method;
        record.problem_id = problem.id;
        record.difficulty = problem.difficulty;
    }

    void take(const ScoredScript& s) {
        record.code = s.code;
        record.executed_ok = s.report.executed_ok;
        record.reward = s.report.reward;
        record.optimal = s.report.executed_ok && s.report.optimal.value_or(false);
    }

    TrialRecord finish(const TrialContext& ctx) {
        record.prompt_tokens = session.prompt_tokens();
        record.completion_tokens = session.completion_tokens();
        record.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
        if (ctx.log != nullptr) {
            nlohmann::json j = to_json(record);
            j["kind"] = "trial";
            ctx.log->append(j);
        }
        return std::move(record);
    }
};

ScoredScript run_script(std::string code, Grader& grader, LlmSession& session, const Sandbox& sandbox) {
    ScoredScript s;
    s.code = std::move(code);
    s.exec = sandbox.execute(s.code);
    s.report = grader.grade(s.exec, session);
    return s;
}

ScoredScript one_shot_script(const ProblemSpec& problem, Grader& grader, LlmSession& session,
                             const TrialContext& ctx) {
    const LlmResponse r = session.complete(requests::full_script(ctx.templates, problem.description, "", 0));
    return run_script(strip_code_fences(r.text), grader, session, ctx.sandbox);
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::mcts_ops:
            return "mcts_ops";
        case Method::one_shot:
            return "one_shot";
        case Method::cot:
            return "cot";
        case Method::self_refine:
            return "self_refine";
        case Method::no_mcts:
            return "no_mcts";
        case Method::no_refine:
            return "no_refine";
    }
    return "one_shot";
}

Method parse_method(std::string_view text) {
    for (Method m : {Method::mcts_ops, Method::one_shot, Method::cot, Method::self_refine, Method::no_mcts,
                     Method::no_refine}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw ConfigError("unknown method '" + std::string(text) + "'");
}

nlohmann::json to_json(const TrialRecord& r) {
    return {{"method", to_string(r.method)},
            {"problem_id", r.problem_id},
            {"difficulty", to_string(r.difficulty)},
            {"executed_ok", r.executed_ok},
            {"reward", r.reward},
            {"optimal", r.optimal},
            {"prompt_tokens", r.prompt_tokens},
            {"completion_tokens", r.completion_tokens},
            {"wall_time_s", r.wall_time_s},
            {"retries", r.retries},
            {"code", r.code},
            {"error", r.error}};
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.problem_id = j.at("problem_id").get<std::string>();
    r.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
    r.executed_ok = j.at("executed_ok").get<bool>();
    r.reward = j.at("reward").get<double>();
    r.optimal = j.at("optimal").get<bool>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
    r.wall_time_s = j.value("wall_time_s", 0.0);
    r.retries = j.value("retries", 0);
    r.code = j.value("code", std::string{});
    r.error = j.value("error", std::string{});
    return r;
}

void append_trials(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw ConfigError("cannot write trial records to " + path);
    }
    for (const auto& r : records) {
        out << to_json(r).dump() << '\n';
    }
}

std::vector<TrialRecord> read_trials(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read trial records from " + path);
    }
    std::vector<TrialRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto j = nlohmann::json::parse(line);
        // Run logs interleave per-iteration telemetry with trial lines.
        if (!j.contains("method")) {
            continue;
        }
        out.push_back(trial_from_json(j));
    }
    return out;
}

TrialRecord one_shot(const ProblemSpec& problem, Grader& grader, TrialContext ctx) {
    Trial t(Method::one_shot, problem, ctx.backend);
    try {
        t.take(one_shot_script(problem, grader, t.session, ctx));
    } catch (const GatewayError& e) {
        t.record.error = e.what();
    }
    return t.finish(ctx);
}

TrialRecord chain_of_thought(const ProblemSpec& problem, Grader& grader, TrialContext ctx) {
    Trial t(Method::cot, problem, ctx.backend);
    try {
        const LlmResponse steps = t.session.complete(requests::reasoning_steps(ctx.templates, problem.description));
        const LlmResponse code =
            t.session.complete(requests::full_script(ctx.templates, problem.description, steps.text, 0));
        t.take(run_script(strip_code_fences(code.text), grader, t.session, ctx.sandbox));
    } catch (const GatewayError& e) {
        t.record.error = e.what();
    }
    return t.finish(ctx);
}

TrialRecord self_refine(const ProblemSpec& problem, Grader& grader, const RefineConfig& refine, TrialContext ctx) {
    refine.validate();
    Trial t(Method::self_refine, problem, ctx.backend);
    try {
        ScoredScript first = one_shot_script(problem, grader, t.session, ctx);
        RefineConfig cfg = refine;
        cfg.enabled = true;
        RefineContext rctx{problem.description, grader, t.session, ctx.sandbox, ctx.templates, 1};
        RefineOutcome out = refine_loop(std::move(first), cfg, rctx);
        t.record.retries = out.retries_used;
        t.take(out.best);
    } catch (const GatewayError& e) {
        t.record.error = e.what();
    }
    return t.finish(ctx);
}

TrialRecord search_trial(const ProblemSpec& problem, Grader& grader, const SearchConfig& search,
                         const RefineConfig& refine, TrialContext ctx, Method label, PipelineOptions options) {
    Trial t(label, problem, ctx.backend);
    SearchContext sctx{t.session, ctx.sandbox, grader, ctx.templates, ctx.log};
    const SearchOutcome out = label == Method::no_mcts ? run_greedy(problem, search, refine, sctx)
                                                       : run_search(problem, search, refine, sctx, options);
    for (const auto& it : out.per_iteration) {
        t.record.retries += it.retries;
    }
    t.record.code = out.best_code;
    t.record.reward = out.best_reward;
    t.record.executed_ok = out.best_report.executed_ok;
    t.record.optimal = out.best_report.executed_ok && out.best_report.optimal.value_or(false);
    return t.finish(ctx);
}

}  // namespace mctsops
