#include "mctsops/prompts.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mctsops/errors.hpp"
#include "mctsops/sandbox.hpp"
#include "mctsops/util.hpp"

#ifndef MCTSOPS_ASSET_DIR
#define MCTSOPS_ASSET_DIR "assets"
#endif

namespace mctsops {
namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read template " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return trim(buf.str());
}

LlmRequest make(const TemplateSet& t, Role role, std::string user, int sample = 0) {
    LlmRequest r;
    r.role = role;
    r.messages.push_back({Speaker::system, t.system(role)});
    r.messages.push_back({Speaker::user, std::move(user)});
    r.sample = sample;
    return r;
}

std::string exec_sections(const ExecutionResult& exec) {
    std::string status = std::string(to_string(exec.status));
    if (exec.exit_code) {
        status += " (exit code " + std::to_string(*exec.exit_code) + ")";
    }
    return tagged("STATUS", status) + "\n" + tagged("STDOUT", exec.stdout_text) + "\n" +
           tagged("STDERR", exec.stderr_text);
}

}  // namespace

std::string_view to_string(SentenceKind kind) {
    switch (kind) {
        case SentenceKind::context:
            return "context";
        case SentenceKind::objective:
            return "objective";
        case SentenceKind::constraint:
            return "constraint";
        case SentenceKind::other:
            return "other";
    }
    return "other";
}

SentenceKind parse_sentence_kind(std::string_view text) {
    if (text == "context") {
        return SentenceKind::context;
    }
    if (text == "objective") {
        return SentenceKind::objective;
    }
    if (text == "constraint") {
        return SentenceKind::constraint;
    }
    return SentenceKind::other;
}

TemplateSet TemplateSet::load(const std::string& dir) {
    TemplateSet t;
    for (Role role : {Role::decomposer, Role::prompt_writer, Role::prompt_scorer, Role::code_writer, Role::evaluator,
                      Role::feedback_writer}) {
        t.system_[role] = read_file(dir + "/" + std::string(to_string(role)) + ".txt");
    }
    for (SentenceKind kind :
         {SentenceKind::context, SentenceKind::objective, SentenceKind::constraint, SentenceKind::other}) {
        t.suffix_[kind] = read_file(dir + "/suffix_" + std::string(to_string(kind)) + ".txt");
    }
    return t;
}

std::string TemplateSet::default_dir() {
    if (const char* env = std::getenv("MCTSOPS_TEMPLATES")) {
        return env;
    }
    return std::string(MCTSOPS_ASSET_DIR) + "/templates";
}

const TemplateSet& TemplateSet::defaults() {
    static const TemplateSet instance = load(default_dir());
    return instance;
}

const std::string& TemplateSet::system(Role role) const {
    return system_.at(role);
}

const std::string& TemplateSet::suffix(SentenceKind kind) const {
    return suffix_.at(kind);
}

std::string tagged(std::string_view tag, std::string_view body) {
    std::string out = "[" + std::string(tag) + "]\n";
    out += body;
    if (!body.empty() && body.back() != '\n') {
        out += '\n';
    }
    out += "[/" + std::string(tag) + "]";
    return out;
}

std::optional<std::string> extract_section(std::string_view text, std::string_view tag) {
    const std::string open = "[" + std::string(tag) + "]\n";
    const std::string close = "[/" + std::string(tag) + "]";
    const auto start = text.find(open);
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    const auto body = start + open.size();
    const auto end = text.find(close, body);
    if (end == std::string_view::npos) {
        return std::nullopt;
    }
    std::string out(text.substr(body, end - body));
    if (!out.empty() && out.back() == '\n') {
        out.pop_back();
    }
    return out;
}

namespace requests {

LlmRequest decompose(const TemplateSet& t, std::string_view problem) {
    return make(t, Role::decomposer, tagged("PROBLEM", problem) + "\nDecompose this problem into sentences.");
}

LlmRequest reasoning_steps(const TemplateSet& t, std::string_view problem) {
    return make(t, Role::decomposer,
                tagged("PROBLEM", problem) +
                    "\nList the numbered reasoning steps needed to formulate and solve this problem in code, "
                    "one step per line.");
}

LlmRequest write_prompt(const TemplateSet& t, std::string_view problem, std::string_view sentence,
                        SentenceKind kind, int sample) {
    return make(t, Role::prompt_writer,
                tagged("PROBLEM", problem) + "\n" + tagged("SENTENCE", sentence) + "\n" +
                    tagged("KIND", to_string(kind)) + "\nWrite the instruction for this sentence.",
                sample);
}

LlmRequest score_prompt(const TemplateSet& t, std::string_view prompt) {
    return make(t, Role::prompt_scorer, tagged("INSTRUCTION", prompt) + "\nRate this instruction.");
}

LlmRequest code_segment(const TemplateSet& t, std::string_view prompt, std::string_view accumulated_code,
                        int sample) {
    return make(t, Role::code_writer,
                tagged("INSTRUCTION", prompt) + "\n" + tagged("CODE", accumulated_code) +
                    "\nWrite only the new code that carries out the instruction, continuing the code above.",
                sample);
}

LlmRequest full_script(const TemplateSet& t, std::string_view problem, std::string_view steps, int sample) {
    std::string body = tagged("PROBLEM", problem) + "\n";
    if (!steps.empty()) {
        body += tagged("STEPS", steps) + "\n";
    }
    body += "Write one complete Python script that solves this problem";
    body += steps.empty() ? "." : ", following the steps above.";
    return make(t, Role::code_writer, std::move(body), sample);
}

LlmRequest evaluate(const TemplateSet& t, std::string_view problem, const ExecutionResult& exec) {
    return make(t, Role::evaluator,
                tagged("PROBLEM", problem) + "\n" + exec_sections(exec) + "\nGrade this execution.");
}

LlmRequest feedback(const TemplateSet& t, std::string_view problem, std::string_view code, double reward,
                    const ExecutionResult& exec) {
    return make(t, Role::feedback_writer,
                tagged("PROBLEM", problem) + "\n" + tagged("CODE", code) + "\n" +
                    tagged("REWARD", format_shortest(reward)) + "\n" + exec_sections(exec) +
                    "\nExplain what must change.");
}

LlmRequest revise(const TemplateSet& t, std::string_view problem, std::string_view code,
                  std::string_view feedback_text, int sample) {
    return make(t, Role::code_writer,
                tagged("PROBLEM", problem) + "\n" + tagged("CODE", code) + "\n" + tagged("FEEDBACK", feedback_text) +
                    "\nRewrite the full script so that it addresses the feedback. Reply with the complete revised "
                    "script.",
                sample);
}

}  // namespace requests

std::string strip_code_fences(std::string_view text) {
    const auto open = text.find("```");
    if (open == std::string_view::npos) {
        return std::string(text);
    }
    const auto body = text.find('\n', open);
    if (body == std::string_view::npos) {
        return std::string(text);
    }
    const auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) {
        return std::string(text.substr(body + 1));
    }
    return std::string(text.substr(body + 1, close - body - 1));
}

}  // namespace mctsops
