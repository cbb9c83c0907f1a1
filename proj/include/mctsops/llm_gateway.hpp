#pragma once

/**
 * Completion interface shared by every LLM-backed stage.
 *
 * Three interchangeable backends sit behind `LlmBackend`:
 *   - HttpBackend      OpenAI-compatible chat-completions endpoint
 *   - ReplayBackend    recorded JSONL fixtures keyed by request hash
 *   - SyntheticBackend seeded stand-in with prompt-quality-dependent outcomes
 *
 * `RecordingBackend` wraps any backend and appends fixture lines, and
 * `LlmSession` meters token usage for one trial.
 */

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mctsops {

enum class Role { decomposer, prompt_writer, prompt_scorer, code_writer, evaluator, feedback_writer };
enum class Speaker { system, user };
enum class BackendKind { http, replay, synthetic };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);
std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);

struct Message {
    Speaker speaker = Speaker::user;
    std::string text;
};

struct LlmRequest {
    Role role = Role::code_writer;
    std::vector<Message> messages;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    // Draw index for repeated identical requests (one per search iteration).
    // Part of the request identity when non-zero.
    int sample = 0;
};

struct LlmResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    BackendKind backend = BackendKind::synthetic;
};

// Stable key over (role, message texts with whitespace runs collapsed, sample).
// Temperature and the output budget are deliberately not part of the key.
std::string canonical_request_hash(const LlmRequest& request);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
    virtual BackendKind kind() const = 0;
};

// Counting semaphore with a runtime limit.
class Semaphore {
public:
    explicit Semaphore(int permits) : permits_(permits) {}
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int permits_;
};

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(Semaphore& s) : s_(s) { s_.acquire(); }
    ~SemaphoreGuard() { s_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    Semaphore& s_;
};

struct HttpConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4";
    std::string api_key_env = "LLM_API_KEY";
    int max_attempts = 3;
    double backoff_initial_s = 1.0;
    double timeout_s = 120.0;
    int max_in_flight = 4;
};

class HttpBackend final : public LlmBackend {
public:
    // Reads the credential from the configured environment variable; a missing
    // credential is reported on the first call, not here.
    explicit HttpBackend(HttpConfig config);
    HttpBackend(HttpConfig config, std::optional<std::string> api_key);

    LlmResponse complete(const LlmRequest& request) override;
    BackendKind kind() const override { return BackendKind::http; }

private:
    HttpConfig config_;
    std::optional<std::string> api_key_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    Semaphore in_flight_;
};

struct FixtureEntry {
    std::string key_hash;
    Role role = Role::code_writer;
    std::string response_text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

std::vector<FixtureEntry> load_fixture_file(const std::string& path);

class ReplayBackend final : public LlmBackend {
public:
    explicit ReplayBackend(std::vector<FixtureEntry> entries);
    static std::unique_ptr<ReplayBackend> from_file(const std::string& path);

    // A key recorded k times is served in recording order; a (k+1)-th request
    // with that key is a FixtureMiss.
    LlmResponse complete(const LlmRequest& request) override;
    BackendKind kind() const override { return BackendKind::replay; }

    // Rewinds every key to its first recording.
    void reset();
    std::size_t misses() const;

private:
    std::map<std::string, std::vector<FixtureEntry>> by_key_;
    std::map<std::string, std::size_t> cursor_;
    mutable std::mutex mutex_;
    std::size_t misses_ = 0;
};

class RecordingBackend final : public LlmBackend {
public:
    // Appends one fixture line per completed call to `path`.
    RecordingBackend(LlmBackend& inner, std::string path);

    LlmResponse complete(const LlmRequest& request) override;
    BackendKind kind() const override { return inner_.kind(); }

private:
    LlmBackend& inner_;
    std::string path_;
    std::mutex mutex_;
};

struct SyntheticConfig {
    std::uint64_t seed = 0;
    // Scales every defect probability; 0 yields a channel that never errs.
    double defect_scale = 1.0;
    // Probability that one revision repairs an execution error / a modelling error.
    double repair_execution = 0.7;
    double repair_modelling = 0.35;
};

class SyntheticBackend final : public LlmBackend {
public:
    explicit SyntheticBackend(SyntheticConfig config);

    LlmResponse complete(const LlmRequest& request) override;
    BackendKind kind() const override { return BackendKind::synthetic; }

    // Latent quality in [0, 1) that the channel assigns to an instruction text.
    double prompt_quality(std::string_view prompt) const;
    const SyntheticConfig& config() const { return config_; }

private:
    double uniform(std::uint64_t key, std::uint64_t salt) const;
    std::string respond(const LlmRequest& request) const;

    SyntheticConfig config_;
};

// Per-trial view of a backend that tallies token usage.
class LlmSession {
public:
    explicit LlmSession(LlmBackend& backend) : backend_(backend) {}

    LlmResponse complete(const LlmRequest& request);

    std::int64_t prompt_tokens() const { return prompt_tokens_; }
    std::int64_t completion_tokens() const { return completion_tokens_; }
    std::int64_t total_tokens() const { return prompt_tokens_ + completion_tokens_; }
    std::int64_t calls() const { return calls_; }
    std::int64_t calls_for(Role role) const;
    LlmBackend& backend() { return backend_; }

private:
    LlmBackend& backend_;
    std::int64_t prompt_tokens_ = 0;
    std::int64_t completion_tokens_ = 0;
    std::int64_t calls_ = 0;
    std::map<Role, std::int64_t> per_role_;
};

// Extracts the last numeric literal (the numerator of an "a/b" fraction counts
// as the literal) and clamps it to [lo, hi]. Integer mode rounds half away
// from zero. Throws ParseFailure when the text holds no number.
double parse_bounded_number(std::string_view text, double lo, double hi, bool integer_mode = false);

// ceil(len / 4), the synthetic channel's token estimate.
std::int64_t estimate_tokens(std::string_view text);

}  // namespace mctsops
