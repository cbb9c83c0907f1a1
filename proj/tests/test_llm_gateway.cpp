#include <doctest.h>

#ifdef MCTSOPS_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include <json.hpp>

#include "mctsops/benchgen.hpp"
#include "mctsops/errors.hpp"
#include "mctsops/llm_gateway.hpp"
#include "mctsops/prompts.hpp"
#include "mctsops/util.hpp"
#include "support.hpp"

using namespace mctsops;

namespace {

LlmRequest simple(Role role, std::string user, int sample = 0) {
    LlmRequest r;
    r.role = role;
    r.messages = {{Speaker::system, "sys"}, {Speaker::user, std::move(user)}};
    r.sample = sample;
    return r;
}

// Minimal chat-completions endpoint on a random local port.
class MockServer {
public:
    explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int hits() const { return hits_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> hits_{0};
};

void reply_ok(httplib::Response& res, const std::string& text) {
    nlohmann::json j;
    j["choices"] = {{{"message", {{"role", "assistant"}, {"content", text}}}}};
    j["usage"] = {{"prompt_tokens", 12}, {"completion_tokens", 3}};
    res.set_content(j.dump(), "application/json");
}

HttpConfig fast_http(const std::string& url) {
    HttpConfig c;
    c.base_url = url;
    c.model = "test-model";
    c.backoff_initial_s = 0.01;
    c.timeout_s = 5;
    return c;
}

}  // namespace

TEST_CASE("parse_bounded_number") {
    CHECK(parse_bounded_number("Score: 8/10. Good clarity.", 0, 10) == 8);
    CHECK(parse_bounded_number("reward = 12", 0, 10) == 10);
    CHECK_THROWS_AS(parse_bounded_number("no digits here", 0, 10), ParseFailure);
    CHECK(parse_bounded_number("9 - very clear", 0, 10, true) == 9);
    CHECK(parse_bounded_number("7 out of 10", 0, 10, true) == 7);
    CHECK(parse_bounded_number("first 3 then 6.5", 0, 10, true) == 7);
    CHECK(parse_bounded_number("value -4", -10, 10) == -4);
    CHECK(parse_bounded_number("range 0-10, pick 4", 0, 10) == 4);
    CHECK(parse_bounded_number("-2.5", -10, 10, true) == -3);
    CHECK(parse_bounded_number("2.5", 0, 10, true) == 3);
    CHECK_THROWS_AS(parse_bounded_number("5", 3, 1), ContractViolation);
}

TEST_CASE("canonical request hash") {
    const auto a = simple(Role::prompt_scorer, "rate  this\n prompt");
    const auto b = simple(Role::prompt_scorer, "rate this prompt");
    CHECK(canonical_request_hash(a) == canonical_request_hash(b));
    auto c = a;
    c.temperature = 0.0;
    c.max_output_tokens = 7;
    CHECK(canonical_request_hash(a) == canonical_request_hash(c));
    CHECK(canonical_request_hash(a) != canonical_request_hash(simple(Role::evaluator, "rate this prompt")));
    CHECK(canonical_request_hash(a) != canonical_request_hash(simple(Role::prompt_scorer, "rate this prompt", 1)));
    CHECK(canonical_request_hash(a).size() == 16);
}

TEST_CASE("replay serves recordings in order and misses loudly") {
    const auto req = simple(Role::code_writer, "write code");
    const auto key = canonical_request_hash(req);
    ReplayBackend replay({{key, Role::code_writer, "first", 10, 2}, {key, Role::code_writer, "second", 11, 3}});
    const auto r1 = replay.complete(req);
    CHECK(r1.text == "first");
    CHECK(r1.prompt_tokens == 10);
    CHECK(r1.completion_tokens == 2);
    CHECK(r1.backend == BackendKind::replay);
    CHECK(replay.complete(req).text == "second");
    CHECK_THROWS_AS(replay.complete(req), FixtureMiss);
    CHECK_THROWS_AS(replay.complete(simple(Role::code_writer, "other")), FixtureMiss);
    CHECK(replay.misses() == 2);
    replay.reset();
    CHECK(replay.complete(req).text == "first");
}

TEST_CASE("recording then replaying reproduces the responses") {
    testing::TempDir dir;
    SyntheticBackend synthetic({.seed = 3});
    {
        RecordingBackend rec(synthetic, dir.file("calls.jsonl"));
        for (int i = 0; i < 5; ++i) {
            rec.complete(simple(Role::prompt_scorer, "[INSTRUCTION]\nprompt " + std::to_string(i) + "\n[/INSTRUCTION]"));
        }
    }
    auto replay = ReplayBackend::from_file(dir.file("calls.jsonl"));
    for (int i = 0; i < 5; ++i) {
        const auto req = simple(Role::prompt_scorer, "[INSTRUCTION]\nprompt " + std::to_string(i) + "\n[/INSTRUCTION]");
        const auto live = synthetic.complete(req);
        const auto back = replay->complete(req);
        CHECK(back.text == live.text);
        CHECK(back.prompt_tokens == live.prompt_tokens);
        CHECK(back.completion_tokens == live.completion_tokens);
    }
}

TEST_CASE("synthetic backend is a pure function of seed and request") {
    const auto& t = TemplateSet::defaults();
    const auto problem = example_hard_problem();
    SyntheticBackend a({.seed = 11});
    SyntheticBackend b({.seed = 11});
    SplitMix64 rng(5);
    for (int i = 0; i < 100; ++i) {
        LlmRequest req;
        const auto text = "sentence " + std::to_string(rng.next() % 1000);
        switch (i % 5) {
            case 0:
                req = requests::write_prompt(t, problem.description, text, SentenceKind::context, i);
                break;
            case 1:
                req = requests::score_prompt(t, text);
                break;
            case 2:
                req = requests::code_segment(t, "Step: " + text + "\nProblem: " + problem.description, "", i);
                break;
            case 3:
                req = requests::decompose(t, problem.description);
                break;
            default:
                req = requests::full_script(t, problem.description, text, i);
                break;
        }
        const auto first = a.complete(req);
        CHECK(first.text == a.complete(req).text);
        CHECK(first.text == b.complete(req).text);
        CHECK(first.prompt_tokens == b.complete(req).prompt_tokens);
    }
    SyntheticBackend other({.seed = 12});
    int differ = 0;
    for (int i = 0; i < 20; ++i) {
        const auto req = requests::write_prompt(t, problem.description, "s", SentenceKind::context, i);
        differ += a.complete(req).text != other.complete(req).text ? 1 : 0;
    }
    CHECK(differ > 0);
}

TEST_CASE("synthetic scorer emits floor(11u) as its only integer") {
    const auto& t = TemplateSet::defaults();
    SyntheticBackend backend({.seed = 21});
    static const std::regex integer_re(R"(\d+)");
    std::set<int> seen;
    for (int i = 0; i < 500; ++i) {
        const std::string prompt = "Instruction variant " + std::to_string(i);
        const auto reply = backend.complete(requests::score_prompt(t, prompt)).text;
        const auto begin = std::sregex_iterator(reply.begin(), reply.end(), integer_re);
        REQUIRE(std::distance(begin, std::sregex_iterator()) == 1);
        const int score = std::stoi(begin->str());
        CHECK(score == static_cast<int>(std::floor(11.0 * backend.prompt_quality(prompt))));
        CHECK(score >= 0);
        CHECK(score <= 10);
        seen.insert(score);
    }
    CHECK(seen.size() == 11);
}

TEST_CASE("synthetic token accounting") {
    SyntheticBackend backend({.seed = 1});
    const auto req = simple(Role::decomposer, "[PROBLEM]\n" + render_description(example_easy_problem()) + "\n[/PROBLEM]");
    const auto r = backend.complete(req);
    CHECK(r.completion_tokens == static_cast<std::int64_t>((r.text.size() + 3) / 4));
    CHECK(r.prompt_tokens == static_cast<std::int64_t>((req.messages[0].text.size() + req.messages[1].text.size() + 3) / 4));
}

TEST_CASE("session totals equal the sum over calls") {
    SyntheticBackend backend({.seed = 2});
    testing::SpyBackend spy(backend);
    LlmSession session(spy);
    const auto& t = TemplateSet::defaults();
    for (int i = 0; i < 10; ++i) {
        session.complete(requests::score_prompt(t, "p" + std::to_string(i)));
    }
    CHECK(session.total_tokens() == spy.tokens());
    CHECK(session.calls() == 10);
    CHECK(session.calls_for(Role::prompt_scorer) == 10);
    CHECK(session.calls_for(Role::evaluator) == 0);
    LlmRequest empty;
    CHECK_THROWS_AS(session.complete(empty), ContractViolation);
}

TEST_CASE("http backend sends a chat completion and reads usage") {
    std::string seen_auth;
    nlohmann::json seen_body;
    MockServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        reply_ok(res, "Score: 9");
    });
    HttpBackend backend(fast_http(server.url()), std::string("secret"));
    const auto r = backend.complete(simple(Role::prompt_scorer, "hello"));
    CHECK(r.text == "Score: 9");
    CHECK(r.prompt_tokens == 12);
    CHECK(r.completion_tokens == 3);
    CHECK(r.backend == BackendKind::http);
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][1]["content"] == "hello");
}

TEST_CASE("http backend retries transient failures") {
    std::atomic<int> calls{0};
    MockServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = calls == 1 ? 503 : 429;
            return;
        }
        reply_ok(res, "done");
    });
    HttpBackend backend(fast_http(server.url()), std::string("k"));
    CHECK(backend.complete(simple(Role::code_writer, "x")).text == "done");
    CHECK(server.hits() == 3);
}

TEST_CASE("http backend gives up after three attempts") {
    MockServer server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    HttpBackend backend(fast_http(server.url()), std::string("k"));
    CHECK_THROWS_AS(backend.complete(simple(Role::code_writer, "x")), GatewayError);
    CHECK(server.hits() == 3);
}

TEST_CASE("http backend does not retry auth failures") {
    MockServer server([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    HttpBackend backend(fast_http(server.url()), std::string("wrong"));
    CHECK_THROWS_AS(backend.complete(simple(Role::code_writer, "x")), GatewayError);
    CHECK(server.hits() == 1);
}

TEST_CASE("http backend without a credential fails at call time") {
    HttpBackend backend(fast_http("http://127.0.0.1:9/v1"), std::nullopt);
    CHECK_THROWS_AS(backend.complete(simple(Role::code_writer, "x")), GatewayError);
    CHECK_THROWS_AS(HttpBackend(fast_http("ftp://example.com")), ConfigError);
}

TEST_CASE("http backend reports an unreachable endpoint") {
    // Bind then release a port so nothing listens on it.
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpBackend backend(fast_http("http://127.0.0.1:" + std::to_string(port) + "/v1"), std::string("k"));
    CHECK_THROWS_AS(backend.complete(simple(Role::code_writer, "x")), GatewayError);
}

TEST_CASE("http backend caps requests in flight") {
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
    MockServer server([&](const httplib::Request&, httplib::Response& res) {
        const int now = ++active;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        --active;
        reply_ok(res, "ok");
    });
    auto cfg = fast_http(server.url());
    cfg.max_in_flight = 2;
    HttpBackend backend(cfg, std::string("k"));
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) {
        threads.emplace_back([&] { backend.complete(simple(Role::code_writer, "x")); });
    }
    for (auto& t : threads) {
        t.join();
    }
    CHECK(peak.load() <= 2);
    CHECK(server.hits() == 6);
}

TEST_CASE("fixture file format") {
    testing::TempDir dir;
    {
        std::ofstream out(dir.file("f.jsonl"));
        out << R"({"key_hash":"00000000000000aa","role_tag":"evaluator","response_text":"Score: 10","prompt_tokens":5,"completion_tokens":2})"
            << "\n\n";
    }
    const auto entries = load_fixture_file(dir.file("f.jsonl"));
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].role == Role::evaluator);
    CHECK(entries[0].response_text == "Score: 10");
    CHECK_THROWS_AS(load_fixture_file(dir.file("missing.jsonl")), ConfigError);
}
