#pragma once

// Role templates and the user-message layouts every stage sends to the LLM.
// Message bodies are built from tagged sections ([PROBLEM] ... [/PROBLEM]) so
// both models and the synthetic backend can find the parts reliably.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mctsops/llm_gateway.hpp"

namespace mctsops {

enum class SentenceKind { context, objective, constraint, other };

std::string_view to_string(SentenceKind kind);
SentenceKind parse_sentence_kind(std::string_view text);

class TemplateSet {
public:
    // Loads <role>.txt for all six roles and suffix_<kind>.txt for the four
    // sentence kinds. Throws ConfigError on a missing file.
    static TemplateSet load(const std::string& dir);
    // Templates shipped in the assets directory, loaded once.
    static const TemplateSet& defaults();
    static std::string default_dir();

    const std::string& system(Role role) const;
    const std::string& suffix(SentenceKind kind) const;

private:
    std::map<Role, std::string> system_;
    std::map<SentenceKind, std::string> suffix_;
};

std::string tagged(std::string_view tag, std::string_view body);
std::optional<std::string> extract_section(std::string_view text, std::string_view tag);

struct ExecutionResult;

namespace requests {

LlmRequest decompose(const TemplateSet& t, std::string_view problem);
LlmRequest reasoning_steps(const TemplateSet& t, std::string_view problem);
LlmRequest write_prompt(const TemplateSet& t, std::string_view problem, std::string_view sentence,
                        SentenceKind kind, int sample);
LlmRequest score_prompt(const TemplateSet& t, std::string_view prompt);
LlmRequest code_segment(const TemplateSet& t, std::string_view prompt, std::string_view accumulated_code,
                        int sample);
LlmRequest full_script(const TemplateSet& t, std::string_view problem, std::string_view steps, int sample);
LlmRequest evaluate(const TemplateSet& t, std::string_view problem, const ExecutionResult& exec);
LlmRequest feedback(const TemplateSet& t, std::string_view problem, std::string_view code, double reward,
                    const ExecutionResult& exec);
LlmRequest revise(const TemplateSet& t, std::string_view problem, std::string_view code,
                  std::string_view feedback_text, int sample);

}  // namespace requests

// Removes a surrounding ``` fence (with optional language tag). Text without
// a fence is returned unchanged.
std::string strip_code_fences(std::string_view text);

}  // namespace mctsops
