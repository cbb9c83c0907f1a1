#include "mctsops/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "mctsops/errors.hpp"
#include "mctsops/util.hpp"

namespace mctsops {
namespace {

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

}  // namespace

const MetricsCell* MetricsTable::find(Method method, Difficulty difficulty) const {
    for (const auto& c : cells) {
        if (c.method == method && c.difficulty == difficulty) {
            return &c;
        }
    }
    return nullptr;
}

MetricsTable aggregate(const std::vector<TrialRecord>& records) {
    if (records.empty()) {
        throw ContractViolation("aggregate needs at least one trial record");
    }
    std::map<std::pair<Method, Difficulty>, std::vector<const TrialRecord*>> groups;
    for (const auto& r : records) {
        groups[{r.method, r.difficulty}].push_back(&r);
    }
    MetricsTable table;
    for (const auto& [key, rs] : groups) {
        MetricsCell c;
        c.method = key.first;
        c.difficulty = key.second;
        c.n_trials = static_cast<int>(rs.size());
        const double n = static_cast<double>(rs.size());
        // Summing in sorted order makes the result independent of record order.
        std::vector<double> rewards;
        std::vector<double> tokens;
        double ok = 0, optimal = 0;
        for (const auto* r : rs) {
            ok += r->executed_ok ? 1 : 0;
            optimal += r->optimal ? 1 : 0;
            rewards.push_back(r->reward);
            tokens.push_back(static_cast<double>(r->total_tokens()));
        }
        std::sort(rewards.begin(), rewards.end());
        std::sort(tokens.begin(), tokens.end());
        c.success_rate = ok / n;
        c.optimality_rate = optimal / n;
        c.reward_mean = sum(rewards) / n;
        c.avg_tokens = sum(tokens) / n;
        double ss = 0;
        for (double x : rewards) {
            ss += (x - c.reward_mean) * (x - c.reward_mean);
        }
        c.reward_sd = std::sqrt(ss / n);
        table.cells.push_back(c);
    }
    return table;
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "text") {
        return ReportFormat::text;
    }
    if (text == "csv") {
        return ReportFormat::csv;
    }
    if (text == "json") {
        return ReportFormat::json;
    }
    throw ConfigError("unknown report format '" + std::string(text) + "'");
}

std::string emit_report(const MetricsTable& table, ReportFormat format) {
    std::string out;
    switch (format) {
        case ReportFormat::text: {
            out += pad("Method", 14) + pad("Level", 7) + pad("Trials", 8) + pad("Success", 10) +
                   pad("Reward", 9) + pad("SD", 7) + pad("Optimal", 10) + "Avg tokens\n";
            for (const auto& c : table.cells) {
                out += pad(std::string(to_string(c.method)), 14) + pad(std::string(to_string(c.difficulty)), 7) +
                       pad(std::to_string(c.n_trials), 8) + pad(fixed(100.0 * c.success_rate, 2) + "%", 10) +
                       pad(fixed(c.reward_mean, 2), 9) + pad(fixed(c.reward_sd, 2), 7) +
                       pad(fixed(100.0 * c.optimality_rate, 2) + "%", 10) + fixed(c.avg_tokens, 0) + "\n";
            }
            break;
        }
        case ReportFormat::csv: {
            out += "method,difficulty,n_trials,success_rate,reward_mean,reward_sd,optimality_rate,avg_tokens\n";
            for (const auto& c : table.cells) {
                out += std::string(to_string(c.method)) + "," + std::string(to_string(c.difficulty)) + "," +
                       std::to_string(c.n_trials) + "," + fixed(c.success_rate, 6) + "," + fixed(c.reward_mean, 6) +
                       "," + fixed(c.reward_sd, 6) + "," + fixed(c.optimality_rate, 6) + "," +
                       fixed(c.avg_tokens, 3) + "\n";
            }
            break;
        }
        case ReportFormat::json: {
            nlohmann::json cells = nlohmann::json::array();
            for (const auto& c : table.cells) {
                cells.push_back({{"method", to_string(c.method)},
                                 {"difficulty", to_string(c.difficulty)},
                                 {"n_trials", c.n_trials},
                                 {"success_rate", c.success_rate},
                                 {"reward_mean", c.reward_mean},
                                 {"reward_sd", c.reward_sd},
                                 {"optimality_rate", c.optimality_rate},
                                 {"avg_tokens", c.avg_tokens}});
            }
            out = nlohmann::json{{"cells", cells}}.dump(2) + "\n";
            break;
        }
    }
    return out;
}

MetricsTable parse_report_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    MetricsTable table;
    for (const auto& e : j.at("cells")) {
        MetricsCell c;
        c.method = parse_method(e.at("method").get<std::string>());
        c.difficulty = parse_difficulty(e.at("difficulty").get<std::string>());
        c.n_trials = e.at("n_trials").get<int>();
        c.success_rate = e.at("success_rate").get<double>();
        c.reward_mean = e.at("reward_mean").get<double>();
        c.reward_sd = e.at("reward_sd").get<double>();
        c.optimality_rate = e.at("optimality_rate").get<double>();
        c.avg_tokens = e.at("avg_tokens").get<double>();
        table.cells.push_back(c);
    }
    return table;
}

}  // namespace mctsops
