#pragma once

/**
 * Tree-search pipeline for prompt-sequence selection.
 *
 * One simulation walks the decomposed sentences of a problem from the root.
 * At each depth it selects a child by UCT when the node already has children,
 * writes and scores a fresh prompt for the sentence, and either reuses the
 * sibling with the same score or expands a new child. When the node is at its
 * branching cap and no sibling shares the score, the UCT choice is followed.
 * The code writer receives the chosen node's prompt plus every segment
 * generated so far on the path; the assembled script is executed, graded,
 * optionally refined, and the final reward is backpropagated from the leaf.
 */

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mctsops/benchgen.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/prompts.hpp"
#include "mctsops/refine.hpp"
#include "mctsops/reward.hpp"
#include "mctsops/sandbox.hpp"
#include "mctsops/search_tree.hpp"

namespace mctsops {

struct Sentence {
    int index = 0;
    std::string text;
    SentenceKind kind = SentenceKind::other;
};

// Keyword tagging: minimize/maximize -> objective; must/constraint/between ->
// constraint; anything else is context.
SentenceKind classify_sentence(std::string_view text);

// Splits the decomposer's reply into at most `max_depth` sentences; extra lines
// are merged into the last one.
std::vector<Sentence> sentences_from_reply(std::string_view reply, int max_depth);

std::vector<Sentence> decompose(std::string_view problem_text, int max_depth, LlmSession& session,
                                const TemplateSet& templates = TemplateSet::defaults());

// Prompt-writer completion followed by the kind-specific instruction suffix.
std::string make_prompt(const Sentence& sentence, std::string_view problem_text, LlmSession& session,
                        const TemplateSet& templates = TemplateSet::defaults(), int sample = 0);

// 0..10. An unparseable reply is retried once, then scores 5.
int score_prompt(std::string_view prompt, LlmSession& session, const TemplateSet& templates = TemplateSet::defaults());

// Code segment with fences removed, newline-terminated so segments concatenate.
std::string generate_segment(std::string_view prompt, std::string_view accumulated_code, LlmSession& session,
                             const TemplateSet& templates = TemplateSet::defaults(), int sample = 0);

struct IterationRecord {
    int iteration = 0;
    std::vector<int> path_scores;
    double reward = kFailureReward;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool refined = false;
    int retries = 0;
    std::string error;
};

struct SearchOutcome {
    std::string best_code;
    double best_reward = kFailureReward;
    RewardReport best_report;
    int iterations = 0;
    nlohmann::json tree_snapshot;
    std::vector<IterationRecord> per_iteration;
};

// Appends per-iteration telemetry and trial records as JSON lines. Safe to
// share between concurrent searches.
class RunLog {
public:
    explicit RunLog(std::string path);
    void append(const nlohmann::json& line);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::mutex mutex_;
};

nlohmann::json to_json(const IterationRecord& record, std::string_view problem_id);

struct PipelineOptions {
    // Decompose again at the start of every simulation instead of once.
    bool redecompose = false;
};

struct SearchContext {
    LlmSession& session;
    const Sandbox& sandbox;
    Grader& grader;
    const TemplateSet& templates = TemplateSet::defaults();
    RunLog* log = nullptr;
};

SearchOutcome run_search(const ProblemSpec& problem, const SearchConfig& config, const RefineConfig& refine,
                         SearchContext ctx, PipelineOptions options = {});

// Single linear pass: one prompt per sentence, no alternatives, no tree
// statistics beyond the one backpropagation. Refinement still applies.
SearchOutcome run_greedy(const ProblemSpec& problem, const SearchConfig& config, const RefineConfig& refine,
                         SearchContext ctx);

}  // namespace mctsops
