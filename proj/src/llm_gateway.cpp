#include "mctsops/llm_gateway.hpp"

#ifdef MCTSOPS_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include <json.hpp>

#include "mctsops/errors.hpp"
#include "mctsops/util.hpp"

namespace mctsops {
namespace {

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string_view to_string(Role role) {
    switch (role) {
        case Role::decomposer:
            return "decomposer";
        case Role::prompt_writer:
            return "prompt_writer";
        case Role::prompt_scorer:
            return "prompt_scorer";
        case Role::code_writer:
            return "code_writer";
        case Role::evaluator:
            return "evaluator";
        case Role::feedback_writer:
            return "feedback_writer";
    }
    return "code_writer";
}

Role parse_role(std::string_view text) {
    for (Role r : {Role::decomposer, Role::prompt_writer, Role::prompt_scorer, Role::code_writer, Role::evaluator,
                   Role::feedback_writer}) {
        if (to_string(r) == text) {
            return r;
        }
    }
    throw ConfigError("unknown role tag '" + std::string(text) + "'");
}

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http:
            return "http";
        case BackendKind::replay:
            return "replay";
        case BackendKind::synthetic:
            return "synthetic";
    }
    return "synthetic";
}

BackendKind parse_backend_kind(std::string_view text) {
    if (text == "http") {
        return BackendKind::http;
    }
    if (text == "replay") {
        return BackendKind::replay;
    }
    if (text == "synthetic") {
        return BackendKind::synthetic;
    }
    throw ConfigError("unknown backend '" + std::string(text) + "'");
}

std::string canonical_request_hash(const LlmRequest& request) {
    std::string canon(to_string(request.role));
    for (const Message& m : request.messages) {
        canon += '\x1f';
        canon += m.speaker == Speaker::system ? "system" : "user";
        canon += '\x1e';
        canon += collapse_whitespace(m.text);
    }
    if (request.sample != 0) {
        canon += "\x1fsample=" + std::to_string(request.sample);
    }
    return hex64(fnv1a64(canon));
}

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

void Semaphore::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return permits_ > 0; });
    --permits_;
}

void Semaphore::release() {
    {
        std::lock_guard lock(mutex_);
        ++permits_;
    }
    cv_.notify_one();
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

std::optional<std::string> env_credential(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') {
        return std::string(v);
    }
    return std::nullopt;
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config) : HttpBackend(config, env_credential(config.api_key_env)) {}

HttpBackend::HttpBackend(HttpConfig config, std::optional<std::string> api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)), in_flight_(std::max(1, config_.max_in_flight)) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.base_url, m, url_re)) {
        throw ConfigError("gateway.base_url is not an http(s) URL: " + config_.base_url);
    }
    scheme_host_port_ = m[1];
    path_prefix_ = m[2].matched ? std::string(m[2]) : std::string{};
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
    if (config_.max_attempts < 1) {
        throw ConfigError("gateway.max_attempts must be >= 1");
    }
}

LlmResponse HttpBackend::complete(const LlmRequest& request) {
    if (!api_key_) {
        throw GatewayError("no API credential: set " + config_.api_key_env);
    }
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    auto& messages = body["messages"] = nlohmann::json::array();
    for (const Message& m : request.messages) {
        messages.push_back({{"role", m.speaker == Speaker::system ? "system" : "user"}, {"content", m.text}});
    }
    const std::string payload = body.dump();

    SemaphoreGuard slot(in_flight_);
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::duration<double>(config_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_bearer_token_auth(*api_key_);

    std::string last_error;
    double backoff = config_.backoff_initial_s;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        auto res = client.Post(path_prefix_ + "/chat/completions", payload, "application/json");
        if (res && res->status == 200) {
            try {
                const auto j = nlohmann::json::parse(res->body);
                LlmResponse out;
                out.backend = BackendKind::http;
                out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
                if (j.contains("usage")) {
                    out.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
                    out.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
                }
                return out;
            } catch (const nlohmann::json::exception& e) {
                throw GatewayError(std::string("malformed completion response: ") + e.what());
            }
        }
        if (res) {
            last_error = "HTTP " + std::to_string(res->status);
            if (!retryable_status(res->status)) {
                throw GatewayError("completion request rejected: " + last_error + " " + res->body);
            }
        } else {
            last_error = httplib::to_string(res.error());
        }
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
    }
    throw GatewayError("completion request failed after " + std::to_string(config_.max_attempts) +
                       " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Replay and recording

std::vector<FixtureEntry> load_fixture_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open fixture file " + path);
    }
    std::vector<FixtureEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto j = nlohmann::json::parse(line);
        FixtureEntry e;
        e.key_hash = j.at("key_hash").get<std::string>();
        e.role = parse_role(j.at("role_tag").get<std::string>());
        e.response_text = j.at("response_text").get<std::string>();
        e.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
        e.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
        out.push_back(std::move(e));
    }
    return out;
}

ReplayBackend::ReplayBackend(std::vector<FixtureEntry> entries) {
    for (auto& e : entries) {
        by_key_[e.key_hash].push_back(std::move(e));
    }
}

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::string& path) {
    return std::make_unique<ReplayBackend>(load_fixture_file(path));
}

LlmResponse ReplayBackend::complete(const LlmRequest& request) {
    const std::string key = canonical_request_hash(request);
    std::lock_guard lock(mutex_);
    const auto it = by_key_.find(key);
    if (it == by_key_.end()) {
        ++misses_;
        throw FixtureMiss("no recorded response for " + std::string(to_string(request.role)) + " request " + key);
    }
    std::size_t& cursor = cursor_[key];
    if (cursor >= it->second.size()) {
        ++misses_;
        throw FixtureMiss("recorded responses for " + std::string(to_string(request.role)) + " request " + key +
                          " exhausted after " + std::to_string(it->second.size()) + " uses");
    }
    const FixtureEntry& e = it->second[cursor++];
    LlmResponse out;
    out.text = e.response_text;
    out.prompt_tokens = e.prompt_tokens;
    out.completion_tokens = e.completion_tokens;
    out.backend = BackendKind::replay;
    return out;
}

void ReplayBackend::reset() {
    std::lock_guard lock(mutex_);
    cursor_.clear();
}

std::size_t ReplayBackend::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

RecordingBackend::RecordingBackend(LlmBackend& inner, std::string path) : inner_(inner), path_(std::move(path)) {}

LlmResponse RecordingBackend::complete(const LlmRequest& request) {
    LlmResponse response = inner_.complete(request);
    nlohmann::json j;
    j["key_hash"] = canonical_request_hash(request);
    j["role_tag"] = to_string(request.role);
    j["response_text"] = response.text;
    j["prompt_tokens"] = response.prompt_tokens;
    j["completion_tokens"] = response.completion_tokens;
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw GatewayError("cannot append to fixture file " + path_);
    }
    out << j.dump() << '\n';
    return response;
}

// ---------------------------------------------------------------------------
// Session

LlmResponse LlmSession::complete(const LlmRequest& request) {
    if (request.messages.empty()) {
        throw ContractViolation("LLM request without messages");
    }
    LlmResponse response = backend_.complete(request);
    prompt_tokens_ += response.prompt_tokens;
    completion_tokens_ += response.completion_tokens;
    ++calls_;
    ++per_role_[request.role];
    return response;
}

std::int64_t LlmSession::calls_for(Role role) const {
    const auto it = per_role_.find(role);
    return it == per_role_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Number parsing

double parse_bounded_number(std::string_view text_view, double lo, double hi, bool integer_mode) {
    if (lo > hi) {
        throw ContractViolation("parse_bounded_number: lo > hi");
    }
    // A leading '-' is a sign only when it does not follow a digit or letter
    // ("0-10" is a range, not minus ten).
    static const std::regex literal_re(R"((^|[^0-9A-Za-z.])(-?)(\d+(?:\.\d+)?))");
    static const std::regex fraction_tail_re(R"(^\s*(?:/|out of)\s*\d+(?:\.\d+)?)");
    const std::string text(text_view);

    std::optional<double> last;
    auto it = std::sregex_iterator(text.begin(), text.end(), literal_re);
    const auto end = std::sregex_iterator();
    std::size_t skip_until = 0;
    for (; it != end; ++it) {
        const auto& m = *it;
        const auto pos = static_cast<std::size_t>(m.position(3));
        if (pos < skip_until) {
            continue;  // denominator of a fraction already taken
        }
        double value = std::stod(m.str(3));
        if (!m.str(2).empty()) {
            value = -value;
        }
        last = value;
        const auto after = pos + m.length(3);
        std::smatch tail;
        const std::string rest = text.substr(after);
        if (std::regex_search(rest, tail, fraction_tail_re)) {
            skip_until = after + static_cast<std::size_t>(tail.length(0));
        }
    }
    if (!last) {
        throw ParseFailure("no numeric literal in reply");
    }
    double value = std::clamp(*last, lo, hi);
    if (integer_mode) {
        value = std::round(value);
        value = std::clamp(value, std::ceil(lo), std::floor(hi));
    }
    return value;
}

}  // namespace mctsops
