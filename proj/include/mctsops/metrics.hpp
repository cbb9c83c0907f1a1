#pragma once

// Per-(method, difficulty) summary statistics over trial records and their
// text / csv / json renderings.

#include <optional>
#include <string>
#include <vector>

#include "mctsops/baselines.hpp"

namespace mctsops {

struct MetricsCell {
    Method method = Method::mcts_ops;
    Difficulty difficulty = Difficulty::easy;
    int n_trials = 0;
    double success_rate = 0.0;
    // Mean and population standard deviation over every trial in the cell,
    // failed executions (-1) included.
    double reward_mean = 0.0;
    double reward_sd = 0.0;
    double optimality_rate = 0.0;
    double avg_tokens = 0.0;

    friend bool operator==(const MetricsCell&, const MetricsCell&) = default;
};

struct MetricsTable {
    // Ordered by method, then difficulty. Only populated cells are present.
    std::vector<MetricsCell> cells;

    const MetricsCell* find(Method method, Difficulty difficulty) const;
    friend bool operator==(const MetricsTable&, const MetricsTable&) = default;
};

// Throws ContractViolation on an empty record list.
MetricsTable aggregate(const std::vector<TrialRecord>& records);

enum class ReportFormat { text, csv, json };
ReportFormat parse_report_format(std::string_view text);

std::string emit_report(const MetricsTable& table, ReportFormat format);
MetricsTable parse_report_json(std::string_view text);

}  // namespace mctsops
