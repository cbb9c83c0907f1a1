#pragma once

// Application configuration: a JSON file with the sections gateway, synthetic,
// sandbox, search, refine and bench, plus top-level grader and jobs.
//
//   {
//     "gateway":   {"backend": "synthetic", "base_url": "...", "model": "...",
//                   "api_key_env": "LLM_API_KEY", "max_attempts": 3, "backoff_s": 1.0,
//                   "timeout_s": 120, "max_in_flight": 4, "fixture": "calls.jsonl",
//                   "templates": "assets/templates"},
//     "synthetic": {"seed": 0, "defect_scale": 1.0, "repair_execution": 0.7, "repair_modelling": 0.35},
//     "sandbox":   {"interpreter": "python3", "timeout_s": 30, "capture_bytes": 65536, "max_concurrent": 8},
//     "search":    {"exploration_c": 1.4142, "simulations": 20, "max_children": 3, "max_depth": 8,
//                   "redecompose": false},
//     "refine":    {"enabled": true, "tau": 7, "max_retries": 3},
//     "bench":     {"difficulty": "hard", "count": 50, "seed": 1, "users": 2, "problems": "set.jsonl"},
//     "grader": "llm",
//     "jobs": 1
//   }
//
// Every key is optional. Unknown keys are rejected.

#include <memory>
#include <string>

#include <json.hpp>

#include "mctsops/benchgen.hpp"
#include "mctsops/experiment.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/sandbox.hpp"

namespace mctsops {

struct BenchConfig {
    Difficulty difficulty = Difficulty::hard;
    int count = 50;
    std::uint64_t seed = 1;
    int n_users = 2;
    std::string problems_path;
};

struct AppConfig {
    BackendKind backend = BackendKind::synthetic;
    HttpConfig http;
    std::string fixture_path;
    std::string templates_dir;
    SyntheticConfig synthetic;
    SandboxConfig sandbox;
    ExperimentConfig experiment;
    BenchConfig bench;
};

void apply_config_json(AppConfig& config, const nlohmann::json& j);
AppConfig load_config(const std::string& path);

std::unique_ptr<LlmBackend> make_backend(const AppConfig& config);

}  // namespace mctsops
