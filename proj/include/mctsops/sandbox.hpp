#pragma once

// Runs candidate scripts in a child process of the configured interpreter.
// Script failure is data (ExecutionResult.status); only a failure to start the
// interpreter is reported as spawn_error.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mctsops/llm_gateway.hpp"

namespace mctsops {

enum class ExecStatus { ok, nonzero_exit, timeout, spawn_error };

std::string_view to_string(ExecStatus status);

struct ExecutionResult {
    ExecStatus status = ExecStatus::spawn_error;
    std::string stdout_text;
    std::string stderr_text;
    bool stdout_truncated = false;
    bool stderr_truncated = false;
    double wall_time = 0.0;
    std::optional<int> exit_code;

    bool ok() const { return status == ExecStatus::ok; }
};

struct ExecLimits {
    double timeout_s = 30.0;
    std::size_t capture_bytes = 64 * 1024;
};

struct SandboxConfig {
    // Interpreter command line; the script path is appended as the last argument.
    std::string interpreter_cmd = "python3";
    ExecLimits limits;
    int max_concurrent = 8;
    // Environment variables passed through to the child; everything else is dropped.
    std::vector<std::string> env_allowlist{"PATH", "LANG", "LC_ALL", "LC_CTYPE"};
};

class Sandbox {
public:
    explicit Sandbox(SandboxConfig config = {});

    ExecutionResult execute(std::string_view code) const;
    ExecutionResult execute(std::string_view code, const ExecLimits& limits) const;

    const SandboxConfig& config() const { return config_; }

private:
    SandboxConfig config_;
    std::vector<std::string> argv_prefix_;
    mutable Semaphore slots_;
};

}  // namespace mctsops
