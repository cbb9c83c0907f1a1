#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "mctsops/errors.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/sandbox.hpp"

namespace testing {

using namespace mctsops;

// Interpreter without site imports; starts several times faster than plain python3.
inline constexpr const char* kPython = "python3 -I -S";

inline std::string fixture(const std::string& name) {
    return std::string(MCTSOPS_FIXTURES) + "/" + name;
}

inline SandboxConfig fast_sandbox(double timeout_s = 10.0) {
    SandboxConfig c;
    c.interpreter_cmd = kPython;
    c.limits.timeout_s = timeout_s;
    return c;
}

// Answers each request through a caller-supplied function and keeps a log of
// every request it saw.
class ScriptedBackend final : public LlmBackend {
public:
    using Responder = std::function<std::string(const LlmRequest&)>;

    explicit ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

    LlmResponse complete(const LlmRequest& request) override {
        LlmResponse r;
        r.text = responder_(request);
        std::int64_t chars = 0;
        for (const auto& m : request.messages) {
            chars += static_cast<std::int64_t>(m.text.size());
        }
        r.prompt_tokens = (chars + 3) / 4;
        r.completion_tokens = estimate_tokens(r.text);
        r.backend = BackendKind::synthetic;
        std::lock_guard lock(mutex_);
        seen_.push_back(request);
        return r;
    }
    BackendKind kind() const override { return BackendKind::synthetic; }

    std::vector<LlmRequest> seen() const {
        std::lock_guard lock(mutex_);
        return seen_;
    }
    int count(Role role) const {
        std::lock_guard lock(mutex_);
        int n = 0;
        for (const auto& r : seen_) {
            n += r.role == role ? 1 : 0;
        }
        return n;
    }

private:
    Responder responder_;
    mutable std::mutex mutex_;
    std::vector<LlmRequest> seen_;
};

// Forwards to another backend while recording requests.
class SpyBackend final : public LlmBackend {
public:
    explicit SpyBackend(LlmBackend& inner) : inner_(inner) {}
    LlmResponse complete(const LlmRequest& request) override {
        {
            std::lock_guard lock(mutex_);
            seen_.push_back(request);
        }
        LlmResponse r = inner_.complete(request);
        std::lock_guard lock(mutex_);
        tokens_ += r.prompt_tokens + r.completion_tokens;
        replies_.push_back(r.text);
        return r;
    }
    BackendKind kind() const override { return inner_.kind(); }

    const std::vector<LlmRequest>& seen() const { return seen_; }
    const std::vector<std::string>& replies() const { return replies_; }
    std::int64_t tokens() const { return tokens_; }
    int count(Role role) const {
        int n = 0;
        for (const auto& r : seen_) {
            n += r.role == role ? 1 : 0;
        }
        return n;
    }

private:
    LlmBackend& inner_;
    std::mutex mutex_;
    std::vector<LlmRequest> seen_;
    std::vector<std::string> replies_;
    std::int64_t tokens_ = 0;
};

class OfflineBackend final : public LlmBackend {
public:
    LlmResponse complete(const LlmRequest&) override { throw GatewayError("connection refused"); }
    BackendKind kind() const override { return BackendKind::http; }
};

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "mctsops-test-XXXXXX").string();
        path_ = ::mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testing
