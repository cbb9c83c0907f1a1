// Seeded stand-in for a chat model.
//
// Every response is a pure function of (seed, role, canonical request). The
// channel reads the tagged sections of each request, so it only understands
// requests built by the `requests` helpers. Instructions carry a latent
// quality drawn from their text; the probability that a generated code block
// is defective falls as that quality rises, which is what makes prompt search
// matter on this channel.

#include <algorithm>
#include <array>
#include <cmath>
#include <regex>
#include <sstream>

#include "mctsops/benchgen.hpp"
#include "mctsops/errors.hpp"
#include "mctsops/grading.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/prompts.hpp"
#include "mctsops/util.hpp"

namespace mctsops {
namespace {

enum class Block { data, objective, box, sinr, other };
enum class Defect { none, execution, modelling };

constexpr std::uint64_t kSaltQuality = 0x51;
constexpr std::uint64_t kSaltStyle = 0x52;
constexpr std::uint64_t kSaltDetail = 0x53;
constexpr std::uint64_t kSaltDefect = 0x60;
constexpr std::uint64_t kSaltDefectKind = 0x70;
constexpr std::uint64_t kSaltRepair = 0x80;

constexpr std::string_view kReportLine = "print(f\"powers={[float(p) for p in powers]}\")\n";
constexpr std::string_view kReportLineBroken = "print(f\"powers={[float(p) for p in powers]}\"\n";

std::string py_float(double x) {
    std::string s = format_shortest(x);
    if (s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string py_list(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? ", " : "") + py_float(xs[i]);
    }
    return out + "]";
}

Block classify_step(std::string_view step) {
    if (contains_icase(step, "SINR") || contains_icase(step, "Signal-to-Interference")) {
        return Block::sinr;
    }
    if (contains_icase(step, "between") || contains_icase(step, "must lie")) {
        return Block::box;
    }
    if (contains_icase(step, "minimi") || contains_icase(step, "maximi") || contains_icase(step, "objective")) {
        return Block::objective;
    }
    if (contains_icase(step, "gain") || contains_icase(step, "noise") || contains_icase(step, "users")) {
        return Block::data;
    }
    return Block::other;
}

double defect_probability(Block block, double quality) {
    switch (block) {
        case Block::data:
        case Block::objective:
            return 0.15 * (1.0 - quality);
        case Block::box:
            return 0.2 * (1.0 - quality);
        case Block::sinr:
            return 0.35 + 0.6 * (1.0 - quality);
        case Block::other:
            return 0.0;
    }
    return 0.0;
}

std::string data_block(const ProblemSpec& p, Defect d) {
    std::vector<double> gains = p.gains;
    if (d == Defect::modelling) {
        std::reverse(gains.begin(), gains.end());
    }
    std::string list = py_list(gains);
    if (d == Defect::execution) {
        list.pop_back();  // unclosed bracket
    }
    return "gains = " + list + "\nnoise = " + py_float(p.noise_w) + "\nn_users = len(gains)\n";
}

std::string objective_block(Defect d) {
    std::string out = d == Defect::modelling ? "direction = \"max\"\n" : "direction = \"min\"\n";
    out += d == Defect::execution ? "\n\ndef total_power(powers)\n" : "\n\ndef total_power(powers):\n";
    out += "    return sum(powers)\n";
    return out;
}

std::string box_block(const ProblemSpec& p, Defect d) {
    std::string out = "p_min = " + py_float(p.p_min) + "\np_max = " + py_float(p.p_max) + "\n";
    out += "if \"powers\" in globals():\n";
    out += "    powers = [min(max(p, p_min), p_max) for p in powers]\n";
    out += "else:\n";
    if (d == Defect::modelling) {
        out += "    powers = [p_max] * n_users\n";
    } else {
        out += "    powers = [p_min if globals().get(\"direction\", \"min\") == \"min\" else p_max] * n_users\n";
    }
    out += d == Defect::execution ? kReportLineBroken : kReportLine;
    return out;
}

std::string sinr_block(const ProblemSpec& p, Defect d) {
    std::ostringstream out;
    out << "gamma = 10 ** (" << py_float(p.sinr_floor_db.value_or(0.0)) << " / 10)\n"
        << "# every SINR constraint tight: g_i p_i - gamma * sum_{j != i} g_j p_j = gamma * noise\n"
        << "A = [[gains[j] if i == j else "
        << (d == Defect::modelling ? "0.0" : "-gamma * gains[j]") << " for j in range(n_users)] for i in range(n_users)]\n"
        << "b = [gamma * " << (d == Defect::execution ? "noise_power" : "noise") << " for _ in range(n_users)]\n"
        << "m = [row[:] + [rhs] for row, rhs in zip(A, b)]\n"
        << "for k in range(n_users):\n"
        << "    piv = max(range(k, n_users), key=lambda r: abs(m[r][k]))\n"
        << "    m[k], m[piv] = m[piv], m[k]\n"
        << "    for r in range(k + 1, n_users):\n"
        << "        f = m[r][k] / m[k][k]\n"
        << "        for c in range(k, n_users + 1):\n"
        << "            m[r][c] -= f * m[k][c]\n"
        << "x = [0.0] * n_users\n"
        << "for i in reversed(range(n_users)):\n"
        << "    x[i] = (m[i][n_users] - sum(m[i][c] * x[c] for c in range(i + 1, n_users))) / m[i][i]\n"
        << "powers = x\n"
        << "if globals().get(\"direction\", \"min\") != \"min\":\n"
        << "    powers = [globals().get(\"p_max\", 1.0)] * n_users\n"
        << kReportLine;
    return out.str();
}

std::string render_block(Block block, const ProblemSpec& p, Defect d) {
    switch (block) {
        case Block::data:
            return data_block(p, d);
        case Block::objective:
            return objective_block(d);
        case Block::box:
            return box_block(p, d);
        case Block::sinr:
            return sinr_block(p, d);
        case Block::other:
            return "# nothing to compute for this step\n";
    }
    return {};
}

std::optional<ProblemSpec> problem_in(std::string_view text) {
    if (auto s = extract_section(text, "PROBLEM")) {
        return extract_parameters(*s);
    }
    // Instructions written by the synthetic prompt writer carry a "Problem:" line.
    const auto pos = text.find("\nProblem: ");
    if (pos != std::string_view::npos) {
        auto line_end = text.find('\n', pos + 1);
        return extract_parameters(text.substr(pos + 10, line_end == std::string_view::npos
                                                             ? std::string_view::npos
                                                             : line_end - pos - 10));
    }
    return extract_parameters(text);
}

std::vector<std::string> canonical_sentences(const ProblemSpec& p) {
    std::vector<std::string> gains;
    for (double g : p.gains) {
        gains.push_back(py_float(g));
    }
    std::string list;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        list += (i == 0 ? "" : (i + 1 == gains.size() ? " and " : ", ")) + gains[i];
    }
    std::vector<std::string> out;
    out.push_back(std::to_string(p.n_users) + " users transmit to a base station with channel gains " + list +
                  " and background noise of " + format_shortest(p.noise_w) + " Watt.");
    out.push_back("Minimize the total transmit power of all users.");
    out.push_back("Each user's transmit power must be between " + format_shortest(p.p_min) + " and " +
                  format_shortest(p.p_max) + " Watt.");
    if (p.sinr_floor_db) {
        out.push_back("Each user must achieve a minimum SINR of " + format_shortest(*p.sinr_floor_db) +
                      " dB, counting interference from the other users and the background noise.");
    }
    return out;
}

std::vector<std::string> naive_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        current.push_back(text[i]);
        if (text[i] == '.' && (i + 1 == text.size() || text[i + 1] == ' ')) {
            if (auto t = trim(current); !t.empty()) {
                out.push_back(t);
            }
            current.clear();
        }
    }
    if (auto t = trim(current); !t.empty()) {
        out.push_back(t);
    }
    return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l + "\n";
    }
    if (!out.empty()) {
        out.pop_back();
    }
    return out;
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    if (from.empty()) {
        return;
    }
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string repair_execution(std::string code) {
    static const std::regex open_list(R"((^|\n)(gains = \[[^\]\n]*)(\n))");
    code = std::regex_replace(code, open_list, "$1$2]$3");
    replace_all(code, "def total_power(powers)\n", "def total_power(powers):\n");
    replace_all(code, kReportLineBroken, kReportLine);
    replace_all(code, "gamma * noise_power", "gamma * noise");
    return code;
}

std::string repair_modelling(std::string code, const std::optional<ProblemSpec>& problem) {
    if (problem) {
        static const std::regex gains_line(R"((^|\n)gains = \[[^\]\n]*\])");
        code = std::regex_replace(code, gains_line, "$1gains = " + py_list(problem->gains));
    }
    replace_all(code, "direction = \"max\"", "direction = \"min\"");
    replace_all(code, "    powers = [p_max] * n_users\n",
                "    powers = [p_min if globals().get(\"direction\", \"min\") == \"min\" else p_max] * n_users\n");
    replace_all(code, "else 0.0 for j in range(n_users)]", "else -gamma * gains[j] for j in range(n_users)]");
    return code;
}

}  // namespace

SyntheticBackend::SyntheticBackend(SyntheticConfig config) : config_(config) {
    if (!(config_.defect_scale >= 0.0)) {
        throw ConfigError("synthetic defect_scale must be >= 0");
    }
}

double SyntheticBackend::uniform(std::uint64_t key, std::uint64_t salt) const {
    SplitMix64 g(mix_seed(config_.seed, key, salt));
    return g.uniform();
}

double SyntheticBackend::prompt_quality(std::string_view prompt) const {
    return uniform(fnv1a64(trim(prompt)), kSaltQuality);
}

LlmResponse SyntheticBackend::complete(const LlmRequest& request) {
    LlmResponse out;
    out.backend = BackendKind::synthetic;
    out.text = respond(request);
    std::int64_t prompt_chars = 0;
    for (const Message& m : request.messages) {
        prompt_chars += static_cast<std::int64_t>(m.text.size());
    }
    out.prompt_tokens = (prompt_chars + 3) / 4;
    out.completion_tokens = estimate_tokens(out.text);
    return out;
}

std::string SyntheticBackend::respond(const LlmRequest& request) const {
    const std::string& body = request.messages.back().text;
    const std::uint64_t key = std::stoull(canonical_request_hash(request), nullptr, 16);

    switch (request.role) {
        case Role::decomposer: {
            const auto problem_text = extract_section(body, "PROBLEM").value_or(body);
            const auto problem = extract_parameters(problem_text);
            if (body.find("numbered reasoning steps") != std::string::npos) {
                std::vector<std::string> steps;
                if (problem) {
                    steps = canonical_sentences(*problem);
                } else {
                    steps = naive_sentences(problem_text);
                }
                steps.push_back("Print the resulting transmit powers as powers=[...].");
                for (std::size_t i = 0; i < steps.size(); ++i) {
                    steps[i] = std::to_string(i + 1) + ". " + steps[i];
                }
                return join_lines(steps);
            }
            return join_lines(problem ? canonical_sentences(*problem) : naive_sentences(problem_text));
        }
        case Role::prompt_writer: {
            static constexpr std::array<std::string_view, 8> styles{
                "Write Python code for this step of the model.",
                "Translate the following requirement into Python code.",
                "Implement this part of the optimization model in Python.",
                "Turn this sentence into executable Python statements.",
                "Using plain Python, encode the following piece of the problem.",
                "Add the Python code that captures this requirement.",
                "Express this requirement in Python, continuing the script.",
                "Carefully implement the step below in Python.",
            };
            static constexpr std::array<std::string_view, 6> details{
                "Use the exact numeric values given.",
                "Reuse the variable names already defined.",
                "Keep the code short and explicit.",
                "Avoid external libraries.",
                "Print nothing except the final powers line.",
                "",
            };
            const std::string sentence = extract_section(body, "SENTENCE").value_or("");
            const std::string problem = extract_section(body, "PROBLEM").value_or("");
            std::string text(styles[static_cast<std::size_t>(uniform(key, kSaltStyle) * styles.size())]);
            text += "\nStep: " + sentence + "\nProblem: " + problem;
            const auto detail = details[static_cast<std::size_t>(uniform(key, kSaltDetail) * details.size())];
            if (!detail.empty()) {
                text += "\n" + std::string(detail);
            }
            return text;
        }
        case Role::prompt_scorer: {
            const std::string prompt = extract_section(body, "INSTRUCTION").value_or(body);
            const int score = static_cast<int>(std::floor(11.0 * prompt_quality(prompt)));
            return "Score: " + std::to_string(std::min(score, 10));
        }
        case Role::code_writer: {
            const auto problem = problem_in(body);
            if (body.find("Rewrite the full script") != std::string::npos) {
                std::string code = extract_section(body, "CODE").value_or("");
                const std::string fb = extract_section(body, "FEEDBACK").value_or("");
                const double u = uniform(key, kSaltRepair);
                if (fb.find("fails to run") != std::string::npos) {
                    if (u < config_.repair_execution) {
                        code = repair_execution(std::move(code));
                    }
                } else if (u < config_.repair_modelling) {
                    code = repair_modelling(std::move(code), problem);
                }
                return "```python\n" + code + (code.empty() || code.back() == '\n' ? "" : "\n") + "```";
            }
            if (!problem) {
                return "```python\nprint(\"could not determine the problem data\")\n```";
            }
            const auto instruction = extract_section(body, "INSTRUCTION");
            if (!instruction) {
                // Whole-script request (one-shot or reasoning-guided).
                const std::string guidance =
                    extract_section(body, "PROBLEM").value_or("") + extract_section(body, "STEPS").value_or("");
                const double quality = prompt_quality(guidance);
                std::vector<Block> blocks{Block::data, Block::objective, Block::box};
                if (problem->sinr_floor_db) {
                    blocks.push_back(Block::sinr);
                }
                std::string code;
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    Defect d = Defect::none;
                    const double p = std::min(1.0, config_.defect_scale * defect_probability(blocks[i], quality));
                    if (uniform(key, kSaltDefect + i) < p) {
                        d = uniform(key, kSaltDefectKind + i) < 0.6 ? Defect::execution : Defect::modelling;
                    }
                    code += (code.empty() ? "" : "\n") + render_block(blocks[i], *problem, d);
                }
                return "```python\n" + code + "```";
            }
            std::string_view step = *instruction;
            if (const auto pos = instruction->find("Step: "); pos != std::string::npos) {
                const auto end = instruction->find('\n', pos);
                step = std::string_view(*instruction).substr(pos + 6, end == std::string::npos ? end : end - pos - 6);
            }
            const Block block = classify_step(step);
            const double quality = prompt_quality(*instruction);
            Defect d = Defect::none;
            const double p = std::min(1.0, config_.defect_scale * defect_probability(block, quality));
            if (uniform(key, kSaltDefect) < p) {
                d = uniform(key, kSaltDefectKind) < 0.6 ? Defect::execution : Defect::modelling;
            }
            const std::string so_far = extract_section(body, "CODE").value_or("");
            std::string code;
            if (block != Block::data && block != Block::other && so_far.find("gains = ") == std::string::npos) {
                code += data_block(*problem, Defect::none);
            }
            code += render_block(block, *problem, d);
            return "```python\n" + code + "```";
        }
        case Role::evaluator: {
            const auto problem = problem_in(body);
            const std::string status = extract_section(body, "STATUS").value_or("");
            if (status.rfind("ok", 0) != 0) {
                return "Score: 0/10. The script did not run to completion.";
            }
            if (!problem) {
                return "Score: 5/10. The script ran; the result could not be checked against the problem.";
            }
            const auto truth = solve_ground_truth(*problem);
            const auto powers = parse_powers(extract_section(body, "STDOUT").value_or(""), problem->n_users);
            if (!powers) {
                return "Score: 0/10. The output does not report the transmit powers.";
            }
            const auto a = assess(*problem, *powers, kGradingEps);
            if (!a.feasible || !truth.feasible) {
                return "Score: 0/10. The reported powers violate the constraints.";
            }
            const int score = rubric_reward(relative_gap(a.objective, truth.objective));
            return "Feasible, total power " + format_shortest(a.objective) + " W. Score: " + std::to_string(score) +
                   "/10";
        }
        case Role::feedback_writer: {
            const std::string status = extract_section(body, "STATUS").value_or("");
            if (status.rfind("ok", 0) != 0) {
                std::string last_error;
                for (const auto& line : split_lines(extract_section(body, "STDERR").value_or(""))) {
                    if (!trim(line).empty()) {
                        last_error = trim(line);
                    }
                }
                return "The script fails to run. Error: " + (last_error.empty() ? status : last_error) +
                       ". Fix this error and keep the rest of the script.";
            }
            return "The script runs, but the reported powers are infeasible or suboptimal (reward " +
                   extract_section(body, "REWARD").value_or("?") +
                   "/10). Re-check the constraint formulation and the direction of the objective.";
        }
    }
    return {};
}

}  // namespace mctsops
