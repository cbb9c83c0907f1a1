#include "mctsops/benchgen.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "mctsops/errors.hpp"
#include "mctsops/linsolve.hpp"
#include "mctsops/util.hpp"

namespace mctsops {
namespace {

// Formats without trailing zeros ("1", "1.5", "-2.5").
std::string format_watts(double x) {
    if (x == 0.0) {
        x = 0.0;  // folds -0
    }
    return format_shortest(x);
}

// Gains always carry a decimal ("1.0", "2.5").
std::string format_gain(double x) {
    std::string s = format_shortest(x);
    if (s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string_view count_word(int n, bool capital) {
    static constexpr std::array<std::string_view, 5> lower{"zero", "one", "two", "three", "four"};
    static constexpr std::array<std::string_view, 5> upper{"Zero", "One", "Two", "Three", "Four"};
    return capital ? upper.at(static_cast<std::size_t>(n)) : lower.at(static_cast<std::size_t>(n));
}

std::string join_and(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += (i + 1 == items.size()) ? " and " : ", ";
        }
        out += items[i];
    }
    return out;
}

// Rounds to a multiple of 1/per_unit, producing the double nearest the decimal.
double round_to(double x, double per_unit) {
    double r = std::round(x * per_unit) / per_unit;
    return r == 0.0 ? 0.0 : r;
}

Binding binding_from_labels(const std::vector<int>& labels) {
    // 0 = at p_min, 1 = at p_max, 2 = SINR tight
    const bool all_lower = std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; });
    const bool all_tight = std::all_of(labels.begin(), labels.end(), [](int l) { return l == 2; });
    if (all_lower) {
        return Binding::lower_bounds;
    }
    if (all_tight) {
        return Binding::sinr_tight;
    }
    return Binding::mixed;
}

// Powers for one active-set labelling: users labelled 0/1 sit on their box
// bound, users labelled 2 hold their SINR constraint with equality.
std::optional<std::vector<double>> solve_labelling(const ProblemSpec& spec, double gamma,
                                                   const std::vector<int>& labels) {
    const int n = spec.n_users;
    std::vector<double> powers(static_cast<std::size_t>(n), 0.0);
    std::vector<int> free_users;
    for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == 0) {
            powers[static_cast<std::size_t>(i)] = spec.p_min;
        } else if (labels[static_cast<std::size_t>(i)] == 1) {
            powers[static_cast<std::size_t>(i)] = spec.p_max;
        } else {
            free_users.push_back(i);
        }
    }
    if (free_users.empty()) {
        return powers;
    }
    const std::size_t m = free_users.size();
    DenseMatrix a(m, m);
    std::vector<double> b(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const int i = free_users[r];
        double rhs = gamma * spec.noise_w;
        for (int j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const double coeff = gamma * spec.gains[static_cast<std::size_t>(j)];
            const auto it = std::find(free_users.begin(), free_users.end(), j);
            if (it == free_users.end()) {
                rhs += coeff * powers[static_cast<std::size_t>(j)];
            } else {
                a(r, static_cast<std::size_t>(it - free_users.begin())) -= coeff;
            }
        }
        a(r, r) += spec.gains[static_cast<std::size_t>(i)];
        b[r] = rhs;
    }
    auto x = solve_linear_system(a, b);
    if (!x) {
        return std::nullopt;
    }
    for (std::size_t r = 0; r < m; ++r) {
        powers[static_cast<std::size_t>(free_users[r])] = (*x)[r];
    }
    return powers;
}

}  // namespace

std::string_view to_string(Difficulty d) {
    return d == Difficulty::easy ? "easy" : "hard";
}

Difficulty parse_difficulty(std::string_view text) {
    if (text == "easy") {
        return Difficulty::easy;
    }
    if (text == "hard") {
        return Difficulty::hard;
    }
    throw ConfigError("unknown difficulty '" + std::string(text) + "'");
}

std::string_view to_string(Binding b) {
    switch (b) {
        case Binding::lower_bounds:
            return "lower_bounds";
        case Binding::sinr_tight:
            return "sinr_tight";
        case Binding::mixed:
            return "mixed";
    }
    return "mixed";
}

void ProblemSpec::validate() const {
    if (n_users < 2 || n_users > kMaxUsers) {
        throw ContractViolation("n_users must be in 2.." + std::to_string(kMaxUsers));
    }
    if (gains.size() != static_cast<std::size_t>(n_users)) {
        throw ContractViolation("gains length does not match n_users");
    }
    for (double g : gains) {
        if (!(g > 0.0)) {
            throw ContractViolation("channel gains must be positive");
        }
    }
    if (!(noise_w > 0.0)) {
        throw ContractViolation("noise power must be positive");
    }
    if (!(p_min >= 0.0) || !(p_min < p_max)) {
        throw ContractViolation("power bounds must satisfy 0 <= p_min < p_max");
    }
    if ((difficulty == Difficulty::hard) != sinr_floor_db.has_value()) {
        throw ContractViolation("hard problems carry an SINR floor and easy ones do not");
    }
}

double db_to_linear(double x_db) {
    return std::pow(10.0, x_db / 10.0);
}

std::vector<double> sinr_linear(const ProblemSpec& spec, const std::vector<double>& powers) {
    std::vector<double> out(powers.size(), 0.0);
    for (std::size_t i = 0; i < powers.size(); ++i) {
        double interference = spec.noise_w;
        for (std::size_t j = 0; j < powers.size(); ++j) {
            if (j != i) {
                interference += spec.gains[j] * powers[j];
            }
        }
        out[i] = spec.gains[i] * powers[i] / interference;
    }
    return out;
}

ProblemSpec generate_problem(Difficulty difficulty, std::uint64_t seed, int n_users) {
    if (n_users < 2 || n_users > kMaxUsers) {
        throw ContractViolation("n_users must be in 2.." + std::to_string(kMaxUsers));
    }
    static constexpr std::array<double, 3> easy_caps{1.0, 1.5, 2.0};
    static constexpr std::array<double, 2> hard_caps{2.0, 3.0};
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        SplitMix64 rng(mix_seed(seed + attempt, difficulty == Difficulty::easy ? 0x65617379u : 0x68617264u,
                                static_cast<std::uint64_t>(n_users)));
        ProblemSpec spec;
        spec.id = std::string(to_string(difficulty)) + "-" + std::to_string(seed);
        spec.difficulty = difficulty;
        spec.n_users = n_users;
        for (int i = 0; i < n_users; ++i) {
            spec.gains.push_back(round_to(0.5 + 3.5 * rng.uniform(), 10.0));
        }
        spec.noise_w = 1.0;
        spec.p_min = 0.0;
        if (difficulty == Difficulty::easy) {
            spec.p_max = easy_caps[rng.index(easy_caps.size())];
        } else {
            spec.sinr_floor_db = round_to(-3.0 + 3.0 * rng.uniform(), 2.0);
            spec.p_max = hard_caps[rng.index(hard_caps.size())];
        }
        spec.description = render_description(spec);
        if (solve_ground_truth(spec).feasible) {
            return spec;
        }
    }
    throw GenerationExhausted("no feasible " + std::string(to_string(difficulty)) +
                              " problem within 100 draws from seed " + std::to_string(seed));
}

std::string render_description(const ProblemSpec& spec) {
    spec.validate();
    const int n = spec.n_users;
    std::ostringstream out;
    std::vector<std::string> gains;
    for (double g : spec.gains) {
        gains.push_back(format_gain(g));
    }
    const std::string everyone = n == 2 ? "both users" : "all " + std::string(count_word(n, false)) + " users";
    if (spec.difficulty == Difficulty::easy) {
        out << count_word(n, true) << " users transmit to a base station. Each user has a channel gain to the base station ("
            << join_and(gains) << ", respectively) and experiences background noise of " << format_watts(spec.noise_w)
            << " Watt. The objective is to minimize the total transmit power of " << everyone
            << ", subject to the constraint that each user's transmit power must be between " << format_watts(spec.p_min)
            << " and " << format_watts(spec.p_max) << " Watt.";
        return out.str();
    }
    out << "A wireless communication network includes " << n << " mobile users and 1 base station. "
        << "The objective is to minimize the total transmit power used by " << everyone
        << ", while ensuring quality of service. Each user transmits to the base station and must achieve a minimum "
        << "Signal-to-Interference-plus-Noise Ratio (SINR) of " << format_watts(*spec.sinr_floor_db) << " dB. "
        << "The SINR for each user depends on their respective channel gain to the base station, interference from the "
        << (n == 2 ? "other user" : "other users") << ", and a background noise power of " << format_watts(spec.noise_w)
        << " Watt. The channel gain from user 1 to the base station is " << gains[0];
    for (int i = 1; i < n; ++i) {
        out << ((i + 1 == n) ? ", and from user " : ", from user ") << (i + 1) << " to the base station is "
            << gains[static_cast<std::size_t>(i)];
    }
    out << ". Each user's transmit power must lie between " << format_watts(spec.p_min) << " and "
        << format_watts(spec.p_max) << " Watt.";
    return out.str();
}

std::optional<ProblemSpec> extract_parameters(std::string_view text_view) {
    static const std::string num = R"((-?\d+(?:\.\d+)?))";
    static const std::regex sinr_re("SINR\\) of " + num + " dB");
    static const std::regex noise_re("noise (?:power )?of " + num + " Watt");
    static const std::regex bounds_re("between " + num + " and " + num + " Watt");
    static const std::regex easy_gains_re(R"(base station \(([^)]*), respectively\))");
    static const std::regex hard_gain_re("from user (\\d+) to the base station is " + num);
    static const std::regex number_re(num);

    const std::string text(text_view);
    ProblemSpec spec;
    std::smatch m;
    if (std::regex_search(text, m, sinr_re)) {
        spec.difficulty = Difficulty::hard;
        spec.sinr_floor_db = std::stod(m[1]);
    }
    if (!std::regex_search(text, m, noise_re)) {
        return std::nullopt;
    }
    spec.noise_w = std::stod(m[1]);
    if (!std::regex_search(text, m, bounds_re)) {
        return std::nullopt;
    }
    spec.p_min = std::stod(m[1]);
    spec.p_max = std::stod(m[2]);
    if (spec.difficulty == Difficulty::easy) {
        if (!std::regex_search(text, m, easy_gains_re)) {
            return std::nullopt;
        }
        const std::string list = m[1];
        for (auto it = std::sregex_iterator(list.begin(), list.end(), number_re); it != std::sregex_iterator(); ++it) {
            spec.gains.push_back(std::stod((*it)[1]));
        }
    } else {
        for (auto it = std::sregex_iterator(text.begin(), text.end(), hard_gain_re); it != std::sregex_iterator();
             ++it) {
            const auto user = static_cast<std::size_t>(std::stoi((*it)[1]));
            if (user != spec.gains.size() + 1) {
                return std::nullopt;
            }
            spec.gains.push_back(std::stod((*it)[2]));
        }
    }
    spec.n_users = static_cast<int>(spec.gains.size());
    spec.description = text;
    try {
        spec.validate();
    } catch (const ContractViolation&) {
        return std::nullopt;
    }
    return spec;
}

GroundTruth solve_ground_truth(const ProblemSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.n_users);
    GroundTruth truth;
    if (!spec.sinr_floor_db) {
        // Total power is increasing in every p_i and only box constraints apply.
        truth.powers.assign(n, spec.p_min);
        truth.objective = spec.p_min * static_cast<double>(n);
        truth.feasible = true;
        truth.binding = Binding::lower_bounds;
        return truth;
    }
    const double gamma = db_to_linear(*spec.sinr_floor_db);
    constexpr double kCheckEps = 1e-9;

    const std::vector<int> all_tight(n, 2);
    if (auto powers = solve_labelling(spec, gamma, all_tight)) {
        if (assess(spec, *powers, kCheckEps).feasible) {
            truth.objective = sum(*powers);
            truth.powers = std::move(*powers);
            truth.feasible = true;
            truth.binding = Binding::sinr_tight;
            return truth;
        }
    }

    // Enumerate every assignment of {p_min, p_max, SINR-tight} to the users.
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) {
        combos *= 3;
    }
    std::vector<int> labels(n, 0);
    for (std::size_t code = 0; code < combos; ++code) {
        std::size_t rest = code;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rest % 3);
            rest /= 3;
        }
        auto powers = solve_labelling(spec, gamma, labels);
        if (!powers || !assess(spec, *powers, kCheckEps).feasible) {
            continue;
        }
        const double objective = sum(*powers);
        if (!truth.feasible || objective < truth.objective) {
            truth.powers = std::move(*powers);
            truth.objective = objective;
            truth.feasible = true;
            truth.binding = binding_from_labels(labels);
        }
    }
    return truth;
}

Assessment assess(const ProblemSpec& spec, const std::vector<double>& powers, double eps) {
    if (powers.size() != static_cast<std::size_t>(spec.n_users)) {
        throw ContractViolation("assess: expected " + std::to_string(spec.n_users) + " powers, got " +
                                std::to_string(powers.size()));
    }
    Assessment out;
    out.objective = sum(powers);
    for (std::size_t i = 0; i < powers.size(); ++i) {
        const int user = static_cast<int>(i);
        if (!std::isfinite(powers[i])) {
            out.violations.push_back({"p_max", user, std::numeric_limits<double>::infinity()});
            continue;
        }
        if (powers[i] < spec.p_min - eps) {
            out.violations.push_back({"p_min", user, spec.p_min - powers[i]});
        }
        if (powers[i] > spec.p_max + eps) {
            out.violations.push_back({"p_max", user, powers[i] - spec.p_max});
        }
    }
    if (spec.sinr_floor_db) {
        const double gamma = db_to_linear(*spec.sinr_floor_db);
        const auto sinr = sinr_linear(spec, powers);
        std::vector<double> sinr_db;
        for (std::size_t i = 0; i < sinr.size(); ++i) {
            sinr_db.push_back(10.0 * std::log10(sinr[i]));
            if (!(sinr[i] >= gamma - eps)) {
                out.violations.push_back({"sinr", static_cast<int>(i), gamma - sinr[i]});
            }
        }
        out.sinr_values_db = std::move(sinr_db);
    }
    out.feasible = out.violations.empty();
    return out;
}

nlohmann::json to_json(const ProblemSpec& spec) {
    nlohmann::json j;
    j["id"] = spec.id;
    j["difficulty"] = to_string(spec.difficulty);
    j["n_users"] = spec.n_users;
    j["gains"] = spec.gains;
    j["noise_w"] = spec.noise_w;
    j["p_min"] = spec.p_min;
    j["p_max"] = spec.p_max;
    j["sinr_floor_db"] = spec.sinr_floor_db ? nlohmann::json(*spec.sinr_floor_db) : nlohmann::json(nullptr);
    j["description"] = spec.description;
    return j;
}

nlohmann::json to_json(const GroundTruth& truth) {
    return {{"powers", truth.powers},
            {"objective", truth.objective},
            {"feasible", truth.feasible},
            {"binding", to_string(truth.binding)}};
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
    ProblemSpec spec;
    spec.id = j.at("id").get<std::string>();
    spec.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
    spec.n_users = j.at("n_users").get<int>();
    spec.gains = j.at("gains").get<std::vector<double>>();
    spec.noise_w = j.at("noise_w").get<double>();
    spec.p_min = j.at("p_min").get<double>();
    spec.p_max = j.at("p_max").get<double>();
    if (j.contains("sinr_floor_db") && !j["sinr_floor_db"].is_null()) {
        spec.sinr_floor_db = j["sinr_floor_db"].get<double>();
    }
    spec.description = j.value("description", std::string{});
    spec.validate();
    if (spec.description.empty()) {
        spec.description = render_description(spec);
    }
    return spec;
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth t;
    t.powers = j.at("powers").get<std::vector<double>>();
    t.objective = j.at("objective").get<double>();
    t.feasible = j.at("feasible").get<bool>();
    const auto b = j.at("binding").get<std::string>();
    t.binding = b == "sinr_tight" ? Binding::sinr_tight : b == "mixed" ? Binding::mixed : Binding::lower_bounds;
    return t;
}

std::vector<BenchProblem> generate_set(Difficulty difficulty, int count, std::uint64_t seed, int n_users) {
    std::vector<BenchProblem> out;
    for (int k = 0; k < count; ++k) {
        // Spread draws so neighbouring problems never share a retry chain.
        ProblemSpec spec = generate_problem(difficulty, seed * 1000 + static_cast<std::uint64_t>(k) * 101, n_users);
        spec.id = std::string(to_string(difficulty)) + "-" + std::to_string(seed) + "-" + std::to_string(k);
        GroundTruth truth = solve_ground_truth(spec);
        out.push_back({std::move(spec), std::move(truth)});
    }
    return out;
}

void write_problem_set(const std::string& path, const std::vector<BenchProblem>& problems) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write problem set to " + path);
    }
    for (const auto& p : problems) {
        nlohmann::json j = to_json(p.spec);
        j["ground_truth"] = to_json(p.truth);
        out << j.dump() << '\n';
    }
}

std::vector<BenchProblem> read_problem_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read problem set " + path);
    }
    std::vector<BenchProblem> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto j = nlohmann::json::parse(line);
        BenchProblem p{problem_from_json(j), {}};
        p.truth = j.contains("ground_truth") ? ground_truth_from_json(j["ground_truth"]) : solve_ground_truth(p.spec);
        out.push_back(std::move(p));
    }
    return out;
}

ProblemSpec example_easy_problem() {
    ProblemSpec spec;
    spec.id = "example-easy";
    spec.difficulty = Difficulty::easy;
    spec.n_users = 2;
    spec.gains = {1.5, 1.0};
    spec.noise_w = 1.0;
    spec.p_min = 0.0;
    spec.p_max = 1.0;
    spec.description = render_description(spec);
    return spec;
}

ProblemSpec example_hard_problem() {
    ProblemSpec spec;
    spec.id = "example-hard";
    spec.difficulty = Difficulty::hard;
    spec.n_users = 2;
    spec.gains = {3.0, 2.0};
    spec.noise_w = 1.0;
    spec.p_min = 0.0;
    spec.p_max = 2.0;
    spec.sinr_floor_db = -1.5;
    spec.description = render_description(spec);
    return spec;
}

}  // namespace mctsops
