#pragma once

// Constrained uplink power-allocation problems: box-constrained ("easy") and
// SINR-constrained ("hard") total-power minimization, their natural-language
// rendering, and an exact ground-truth solver.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mctsops {

enum class Difficulty { easy, hard };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view text);

struct ProblemSpec {
    std::string id;
    Difficulty difficulty = Difficulty::easy;
    int n_users = 2;
    std::vector<double> gains;
    double noise_w = 1.0;
    double p_min = 0.0;
    double p_max = 1.0;
    std::optional<double> sinr_floor_db;
    std::string description;

    // Throws ContractViolation on inconsistent fields.
    void validate() const;
};

enum class Binding { lower_bounds, sinr_tight, mixed };

std::string_view to_string(Binding b);

struct GroundTruth {
    std::vector<double> powers;
    double objective = 0.0;
    bool feasible = false;
    Binding binding = Binding::lower_bounds;
};

struct Violation {
    std::string constraint;  // "p_min", "p_max" or "sinr"
    int user = 0;
    double magnitude = 0.0;  // how far past the limit, in the constraint's units
};

struct Assessment {
    bool feasible = false;
    std::vector<Violation> violations;
    double objective = 0.0;
    std::optional<std::vector<double>> sinr_values_db;
};

inline constexpr int kMaxUsers = 4;

double db_to_linear(double x_db);

// g_i p_i / (noise + sum_{j != i} g_j p_j) for every user.
std::vector<double> sinr_linear(const ProblemSpec& spec, const std::vector<double>& powers);

ProblemSpec generate_problem(Difficulty difficulty, std::uint64_t seed, int n_users = 2);

std::string render_description(const ProblemSpec& spec);

// Recovers the numeric fields of a rendered description. Returns nullopt when
// the text does not follow either template.
std::optional<ProblemSpec> extract_parameters(std::string_view text);

GroundTruth solve_ground_truth(const ProblemSpec& spec);

Assessment assess(const ProblemSpec& spec, const std::vector<double>& powers, double eps = 1e-6);

nlohmann::json to_json(const ProblemSpec& spec);
nlohmann::json to_json(const GroundTruth& truth);
ProblemSpec problem_from_json(const nlohmann::json& j);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

// One benchmark entry: the spec plus its precomputed optimum.
struct BenchProblem {
    ProblemSpec spec;
    GroundTruth truth;
};

std::vector<BenchProblem> generate_set(Difficulty difficulty, int count, std::uint64_t seed,
                                       int n_users = 2);
void write_problem_set(const std::string& path, const std::vector<BenchProblem>& problems);
std::vector<BenchProblem> read_problem_set(const std::string& path);

// The two worked instances the benchmark family is modelled on.
ProblemSpec example_easy_problem();
ProblemSpec example_hard_problem();

}  // namespace mctsops
