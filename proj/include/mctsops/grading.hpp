#pragma once

// Output-contract parsing and the quality rubric shared by the oracle grader
// and the synthetic evaluator.

#include <optional>
#include <string_view>
#include <vector>

namespace mctsops {

// Feasibility tolerance applied when grading printed solutions. Scripts print
// rounded decimals, so the exact-arithmetic tolerance would reject them.
inline constexpr double kGradingEps = 1e-3;
inline constexpr double kOptimalityGap = 0.01;

// Reads the last `powers=[p1, ..., pn]` line; falls back to the last n numeric
// literals of the output. nullopt when neither yields n finite values.
std::optional<std::vector<double>> parse_powers(std::string_view stdout_text, int n_users);

// (objective - optimum) / max(optimum, 0.01)
double relative_gap(double objective, double optimum);

// 5 + 5 * max(0, 1 - gap / 0.5), rounded to the nearest integer.
int rubric_reward(double gap);

}  // namespace mctsops
