#include "mctsops/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "mctsops/errors.hpp"

namespace mctsops {
namespace {

using Json = nlohmann::json;
using Setter = std::function<void(const Json&)>;

template <typename T>
Setter set(T& field) {
    return [&field](const Json& v) { field = v.get<T>(); };
}

void apply_section(const Json& section, const std::string& name, const std::map<std::string, Setter>& setters) {
    if (!section.is_object()) {
        throw ConfigError("config section '" + name + "' must be an object");
    }
    for (const auto& [key, value] : section.items()) {
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown config key '" + name + "." + key + "'");
        }
        try {
            it->second(value);
        } catch (const Json::exception& e) {
            throw ConfigError("bad value for '" + name + "." + key + "': " + e.what());
        }
    }
}

}  // namespace

void apply_config_json(AppConfig& c, const Json& j) {
    if (!j.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }
    auto& ex = c.experiment;
    for (const auto& [key, value] : j.items()) {
        if (key == "gateway") {
            apply_section(value, key,
                          {{"backend", [&](const Json& v) { c.backend = parse_backend_kind(v.get<std::string>()); }},
                           {"base_url", set(c.http.base_url)},
                           {"model", set(c.http.model)},
                           {"api_key_env", set(c.http.api_key_env)},
                           {"max_attempts", set(c.http.max_attempts)},
                           {"backoff_s", set(c.http.backoff_initial_s)},
                           {"timeout_s", set(c.http.timeout_s)},
                           {"max_in_flight", set(c.http.max_in_flight)},
                           {"fixture", set(c.fixture_path)},
                           {"templates", set(c.templates_dir)}});
        } else if (key == "synthetic") {
            apply_section(value, key,
                          {{"seed", set(c.synthetic.seed)},
                           {"defect_scale", set(c.synthetic.defect_scale)},
                           {"repair_execution", set(c.synthetic.repair_execution)},
                           {"repair_modelling", set(c.synthetic.repair_modelling)}});
        } else if (key == "sandbox") {
            apply_section(value, key,
                          {{"interpreter", set(c.sandbox.interpreter_cmd)},
                           {"timeout_s", set(c.sandbox.limits.timeout_s)},
                           {"capture_bytes", set(c.sandbox.limits.capture_bytes)},
                           {"max_concurrent", set(c.sandbox.max_concurrent)}});
        } else if (key == "search") {
            apply_section(value, key,
                          {{"exploration_c", set(ex.search.exploration_c)},
                           {"simulations", set(ex.search.simulations)},
                           {"max_children", set(ex.search.max_children)},
                           {"max_depth", set(ex.search.max_depth)},
                           {"seed", set(ex.search.rng_seed)},
                           {"redecompose", set(ex.pipeline.redecompose)}});
        } else if (key == "refine") {
            apply_section(value, key,
                          {{"enabled", set(ex.refine.enabled)},
                           {"tau", set(ex.refine.tau)},
                           {"max_retries", set(ex.refine.max_retries)}});
        } else if (key == "bench") {
            apply_section(
                value, key,
                {{"difficulty", [&](const Json& v) { c.bench.difficulty = parse_difficulty(v.get<std::string>()); }},
                 {"count", set(c.bench.count)},
                 {"seed", set(c.bench.seed)},
                 {"users", set(c.bench.n_users)},
                 {"problems", set(c.bench.problems_path)}});
        } else if (key == "grader") {
            if (!value.is_string()) {
                throw ConfigError("grader must be a string");
            }
            ex.grader = parse_grader_kind(value.get<std::string>());
        } else if (key == "jobs") {
            if (!value.is_number_integer()) {
                throw ConfigError("jobs must be an integer");
            }
            ex.jobs = value.get<int>();
        } else {
            throw ConfigError("unknown config section '" + key + "'");
        }
    }
    ex.search.validate();
    ex.refine.validate();
    if (ex.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    AppConfig c;
    try {
        apply_config_json(c, Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return c;
}

std::unique_ptr<LlmBackend> make_backend(const AppConfig& config) {
    switch (config.backend) {
        case BackendKind::http:
            return std::make_unique<HttpBackend>(config.http);
        case BackendKind::replay:
            if (config.fixture_path.empty()) {
                throw ConfigError("replay backend needs gateway.fixture");
            }
            return ReplayBackend::from_file(config.fixture_path);
        case BackendKind::synthetic:
            return std::make_unique<SyntheticBackend>(config.synthetic);
    }
    throw ConfigError("unsupported backend");
}

}  // namespace mctsops
