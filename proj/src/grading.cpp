#include "mctsops/grading.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <string>

namespace mctsops {
namespace {

std::vector<double> numbers_in(const std::string& text) {
    static const std::regex number_re(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
    std::vector<double> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), number_re); it != std::sregex_iterator(); ++it) {
        try {
            out.push_back(std::stod(it->str()));
        } catch (const std::exception&) {
            // out-of-range literal; skip it
        }
    }
    return out;
}

bool all_finite(const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::optional<std::vector<double>> parse_powers(std::string_view stdout_view, int n_users) {
    static const std::regex line_re(R"(powers\s*=\s*\[([^\]]*)\])");
    const std::string text(stdout_view);
    std::optional<std::string> last_list;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), line_re); it != std::sregex_iterator(); ++it) {
        last_list = (*it)[1].str();
    }
    const auto n = static_cast<std::size_t>(n_users);
    if (last_list) {
        auto values = numbers_in(*last_list);
        if (values.size() == n && all_finite(values)) {
            return values;
        }
    }
    auto values = numbers_in(text);
    if (values.size() < n) {
        return std::nullopt;
    }
    std::vector<double> tail(values.end() - static_cast<std::ptrdiff_t>(n), values.end());
    if (!all_finite(tail)) {
        return std::nullopt;
    }
    return tail;
}

double relative_gap(double objective, double optimum) {
    return (objective - optimum) / std::max(optimum, 0.01);
}

int rubric_reward(double gap) {
    const double shortfall = std::max(0.0, gap) / 0.5;
    return static_cast<int>(std::lround(5.0 + 5.0 * std::max(0.0, 1.0 - shortfall)));
}

}  // namespace mctsops
