#include "mctsops/pipeline.hpp"

#include <cctype>
#include <fstream>

#include "mctsops/errors.hpp"
#include "mctsops/util.hpp"

namespace mctsops {
namespace {

std::string strip_list_marker(std::string line) {
    std::size_t i = 0;
    while (i < line.size() && (std::isdigit(static_cast<unsigned char>(line[i])) != 0)) {
        ++i;
    }
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
        return trim(line.substr(i + 1));
    }
    if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
        return trim(line.substr(1));
    }
    return line;
}

ScoredScript execute_and_grade(std::string code, const SearchContext& ctx) {
    ScoredScript s;
    s.code = std::move(code);
    s.exec = ctx.sandbox.execute(s.code);
    s.report = ctx.grader.grade(s.exec, ctx.session);
    return s;
}

// Runs the refine loop when enabled and below threshold; returns the final
// script and fills in the telemetry flags.
ScoredScript finish(ScoredScript script, const RefineConfig& refine, const SearchContext& ctx,
                    std::string_view problem_text, int sample_base, IterationRecord& rec) {
    if (!refine.enabled || script.report.reward >= refine.tau) {
        return script;
    }
    RefineContext rctx{problem_text, ctx.grader, ctx.session, ctx.sandbox, ctx.templates, sample_base};
    RefineOutcome r = refine_loop(std::move(script), refine, rctx);
    rec.retries = r.retries_used;
    rec.refined = r.retries_used > 0;
    return std::move(r.best);
}

}  // namespace

SentenceKind classify_sentence(std::string_view text) {
    if (contains_icase(text, "minimi") || contains_icase(text, "maximi")) {
        return SentenceKind::objective;
    }
    if (contains_icase(text, "must") || contains_icase(text, "constraint") || contains_icase(text, "between")) {
        return SentenceKind::constraint;
    }
    return SentenceKind::context;
}

std::vector<Sentence> sentences_from_reply(std::string_view reply, int max_depth) {
    if (max_depth < 1) {
        throw ContractViolation("max_depth must be >= 1");
    }
    std::vector<std::string> lines;
    for (const auto& raw : split_lines(reply)) {
        std::string line = strip_list_marker(trim(raw));
        if (!line.empty()) {
            lines.push_back(std::move(line));
        }
    }
    if (lines.empty()) {
        throw DecomposeFailure("decomposer returned no sentences");
    }
    while (lines.size() > static_cast<std::size_t>(max_depth)) {
        std::string tail = std::move(lines.back());
        lines.pop_back();
        lines.back() += " " + tail;
    }
    std::vector<Sentence> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out.push_back({static_cast<int>(i), lines[i], classify_sentence(lines[i])});
    }
    return out;
}

std::vector<Sentence> decompose(std::string_view problem_text, int max_depth, LlmSession& session,
                                const TemplateSet& templates) {
    if (trim(problem_text).empty()) {
        throw ContractViolation("decompose: empty problem text");
    }
    const LlmResponse r = session.complete(requests::decompose(templates, problem_text));
    return sentences_from_reply(r.text, max_depth);
}

std::string make_prompt(const Sentence& sentence, std::string_view problem_text, LlmSession& session,
                        const TemplateSet& templates, int sample) {
    const LlmResponse r =
        session.complete(requests::write_prompt(templates, problem_text, sentence.text, sentence.kind, sample));
    return trim(r.text) + "\n" + templates.suffix(sentence.kind);
}

int score_prompt(std::string_view prompt, LlmSession& session, const TemplateSet& templates) {
    if (trim(prompt).empty()) {
        throw ContractViolation("score_prompt: empty prompt");
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
        LlmRequest req = requests::score_prompt(templates, prompt);
        req.sample = attempt;
        const LlmResponse r = session.complete(req);
        try {
            return static_cast<int>(parse_bounded_number(r.text, 0.0, 10.0, true));
        } catch (const ParseFailure&) {
        }
    }
    return 5;
}

std::string generate_segment(std::string_view prompt, std::string_view accumulated_code, LlmSession& session,
                             const TemplateSet& templates, int sample) {
    const LlmResponse r = session.complete(requests::code_segment(templates, prompt, accumulated_code, sample));
    std::string code = strip_code_fences(r.text);
    if (!code.empty() && code.back() != '\n') {
        code.push_back('\n');
    }
    return code;
}

RunLog::RunLog(std::string path) : path_(std::move(path)) {
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw ConfigError("cannot open run log " + path_);
    }
}

void RunLog::append(const nlohmann::json& line) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    out << line.dump() << '\n';
}

nlohmann::json to_json(const IterationRecord& record, std::string_view problem_id) {
    nlohmann::json j;
    j["problem_id"] = problem_id;
    j["iteration"] = record.iteration;
    j["path_scores"] = record.path_scores;
    j["reward"] = record.reward;
    j["prompt_tokens"] = record.prompt_tokens;
    j["completion_tokens"] = record.completion_tokens;
    j["refined"] = record.refined;
    if (!record.error.empty()) {
        j["error"] = record.error;
    }
    return j;
}

SearchOutcome run_search(const ProblemSpec& problem, const SearchConfig& config, const RefineConfig& refine,
                         SearchContext ctx, PipelineOptions options) {
    config.validate();
    refine.validate();

    SearchTree tree;
    SearchOutcome outcome;
    std::optional<std::vector<Sentence>> cached;
    bool have_best = false;

    for (int i = 0; i < config.simulations; ++i) {
        IterationRecord rec;
        rec.iteration = i;
        const auto p0 = ctx.session.prompt_tokens();
        const auto c0 = ctx.session.completion_tokens();
        NodeId node = tree.root();
        std::optional<ScoredScript> result;

        try {
            if (!cached || options.redecompose) {
                cached = decompose(problem.description, config.max_depth, ctx.session, ctx.templates);
            }
            std::string code;
            for (const Sentence& s : *cached) {
                std::optional<NodeId> selected;
                if (!tree.node(node).children.empty()) {
                    selected = tree.select_child(node, config.exploration_c);
                }
                std::string prompt = make_prompt(s, problem.description, ctx.session, ctx.templates, i);
                const int score = score_prompt(prompt, ctx.session, ctx.templates);
                rec.path_scores.push_back(score);

                NodeId next;
                if (tree.child_with_score(node, score) || !tree.saturated(node, config)) {
                    next = tree.expand_or_reuse(node, std::move(prompt), score, config).node;
                } else {
                    next = *selected;
                }
                node = next;
                code += generate_segment(tree.node(node).prompt_text, code, ctx.session, ctx.templates, i);
            }
            result = finish(execute_and_grade(std::move(code), ctx), refine, ctx, problem.description, i * 100, rec);
        } catch (const GatewayError& e) {
            rec.error = e.what();
        } catch (const ParseFailure& e) {
            rec.error = e.what();
        } catch (const DecomposeFailure& e) {
            rec.error = e.what();
            cached.reset();
        }

        rec.reward = result ? result->report.reward : kFailureReward;
        tree.backpropagate(node, rec.reward);
        rec.prompt_tokens = ctx.session.prompt_tokens() - p0;
        rec.completion_tokens = ctx.session.completion_tokens() - c0;

        if (result && (!have_best || result->report.reward > outcome.best_reward)) {
            outcome.best_reward = result->report.reward;
            outcome.best_report = result->report;
            outcome.best_code = result->code;
            have_best = true;
        }
        if (ctx.log != nullptr) {
            ctx.log->append(to_json(rec, problem.id));
        }
        outcome.per_iteration.push_back(std::move(rec));
        ++outcome.iterations;
    }
    outcome.tree_snapshot = tree.to_json();
    return outcome;
}

SearchOutcome run_greedy(const ProblemSpec& problem, const SearchConfig& config, const RefineConfig& refine,
                         SearchContext ctx) {
    config.validate();
    refine.validate();

    SearchTree tree;
    SearchOutcome outcome;
    IterationRecord rec;
    std::optional<ScoredScript> result;
    try {
        const auto sentences = decompose(problem.description, config.max_depth, ctx.session, ctx.templates);
        std::string code;
        for (const Sentence& s : sentences) {
            const std::string prompt = make_prompt(s, problem.description, ctx.session, ctx.templates, 0);
            code += generate_segment(prompt, code, ctx.session, ctx.templates, 0);
        }
        result = finish(execute_and_grade(std::move(code), ctx), refine, ctx, problem.description, 0, rec);
    } catch (const GatewayError& e) {
        rec.error = e.what();
    } catch (const ParseFailure& e) {
        rec.error = e.what();
    } catch (const DecomposeFailure& e) {
        rec.error = e.what();
    }
    rec.reward = result ? result->report.reward : kFailureReward;
    rec.prompt_tokens = ctx.session.prompt_tokens();
    rec.completion_tokens = ctx.session.completion_tokens();
    tree.backpropagate(tree.root(), rec.reward);
    if (result) {
        outcome.best_reward = result->report.reward;
        outcome.best_report = result->report;
        outcome.best_code = result->code;
    }
    if (ctx.log != nullptr) {
        ctx.log->append(to_json(rec, problem.id));
    }
    outcome.per_iteration.push_back(std::move(rec));
    outcome.iterations = 1;
    outcome.tree_snapshot = tree.to_json();
    return outcome;
}

}  // namespace mctsops
