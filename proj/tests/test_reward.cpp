#include <doctest.h>

#include <cmath>

#include "grid_oracle.hpp"
#include "mctsops/benchgen.hpp"
#include "mctsops/errors.hpp"
#include "mctsops/reward.hpp"
#include "mctsops/util.hpp"
#include "support.hpp"

using namespace mctsops;

namespace {

ExecutionResult ran(std::string stdout_text) {
    ExecutionResult e;
    e.status = ExecStatus::ok;
    e.exit_code = 0;
    e.stdout_text = std::move(stdout_text);
    return e;
}

ExecutionResult failed(ExecStatus status) {
    ExecutionResult e;
    e.status = status;
    if (status == ExecStatus::nonzero_exit) {
        e.exit_code = 1;
    }
    e.stderr_text = "Traceback (most recent call last):\nSyntaxError: invalid syntax\n";
    return e;
}

bool in_range(double r) {
    return r == kFailureReward || (r >= 0.0 && r <= 10.0);
}

}  // namespace

TEST_CASE("failed executions score -1 without calling the evaluator") {
    testing::ScriptedBackend backend([](const LlmRequest&) { return std::string("Score: 10"); });
    LlmSession session(backend);
    const auto easy = example_easy_problem();
    for (ExecStatus s : {ExecStatus::nonzero_exit, ExecStatus::timeout, ExecStatus::spawn_error}) {
        const auto r = llm_reward(failed(s), easy.description, session);
        CHECK(r.reward == kFailureReward);
        CHECK_FALSE(r.executed_ok);
        const auto o = oracle_reward(failed(s), easy, solve_ground_truth(easy));
        CHECK(o.reward == kFailureReward);
        CHECK_FALSE(is_optimal(o));
    }
    CHECK(backend.count(Role::evaluator) == 0);
    CHECK(session.calls() == 0);
}

TEST_CASE("evaluator reply is parsed into the reward") {
    testing::ScriptedBackend backend(
        [](const LlmRequest&) { return std::string("Score: 10. All constraints satisfied."); });
    LlmSession session(backend);
    const auto r = llm_reward(ran("powers=[0.0, 0.0]\n"), example_easy_problem().description, session);
    CHECK(r.reward == 10.0);
    CHECK(r.executed_ok);
    CHECK(r.rationale == "Score: 10. All constraints satisfied.");
    CHECK(backend.count(Role::evaluator) == 1);
}

TEST_CASE("unparseable evaluator replies are retried once, then score 0") {
    int calls = 0;
    testing::ScriptedBackend backend([&](const LlmRequest&) {
        ++calls;
        return std::string(calls == 1 ? "Looks fine." : "Good: 8/10");
    });
    LlmSession session(backend);
    CHECK(llm_reward(ran("powers=[0.0, 0.0]\n"), "p", session).reward == 8.0);

    testing::ScriptedBackend mute([](const LlmRequest&) { return std::string("no opinion"); });
    LlmSession mute_session(mute);
    const auto r = llm_reward(ran("powers=[0.0, 0.0]\n"), "p", mute_session);
    CHECK(r.reward == 0.0);
    CHECK(r.executed_ok);
    CHECK(mute.count(Role::evaluator) == 2);
}

TEST_CASE("oracle examples") {
    const auto easy = example_easy_problem();
    const auto e = oracle_reward(ran("powers=[0.0, 0.0]\n"), easy, solve_ground_truth(easy));
    CHECK(e.reward == 10.0);
    CHECK(e.feasible == true);
    CHECK(e.objective_value == 0.0);
    CHECK(e.optimal == true);

    const auto hard = example_hard_problem();
    const auto truth = solve_ground_truth(hard);
    const auto h = oracle_reward(ran("powers=[0.8080, 1.2121]\n"), hard, truth);
    CHECK(h.feasible == true);
    CHECK(h.reward == 10.0);
    CHECK(h.optimal == true);

    // Both users at 2 W: each SINR is 6/7 = -0.67 dB for user 1 but
    // 4/7 = -2.43 dB for user 2, below the -1.5 dB floor.
    const auto over = oracle_reward(ran("powers=[2.0, 2.0]\n"), hard, truth);
    CHECK(over.executed_ok);
    CHECK(over.feasible == false);
    CHECK(over.reward == 0.0);
    CHECK(over.optimal == false);

    // A feasible point more than 50% above the optimum lands on the floor of the scale.
    const auto wasteful = oracle_reward(ran("powers=[1.5, 2.0]\n"), hard, truth);
    REQUIRE(wasteful.feasible == true);
    CHECK(std::abs((*wasteful.objective_value - truth.objective) / truth.objective - 0.7327) < 1e-3);
    CHECK(wasteful.reward == 5.0);
    CHECK(wasteful.optimal == false);
}

TEST_CASE("oracle output parsing") {
    const auto easy = example_easy_problem();
    const auto truth = solve_ground_truth(easy);
    CHECK(oracle_reward(ran("solving...\npowers=[0, 0]\n"), easy, truth).reward == 10.0);
    CHECK(oracle_reward(ran("result: 0.0 0.0\n"), easy, truth).reward == 10.0);
    const auto none = oracle_reward(ran("done\n"), easy, truth);
    CHECK(none.reward == 0.0);
    CHECK(none.executed_ok);
    CHECK(none.optimal == false);
    CHECK(oracle_reward(ran("powers=[1.2, 0.0]\n"), easy, truth).reward == 0.0);
    // Without a powers line the last two literals are taken.
    CHECK(oracle_reward(ran("p1 = 0.0\np2 = 0.0\n"), easy, truth).feasible == false);
}

TEST_CASE("oracle without ground truth") {
    const auto easy = example_easy_problem();
    CHECK_THROWS_AS(oracle_reward(ran("powers=[0, 0]"), easy, std::nullopt), OracleUnavailable);
    ProblemSpec impossible = example_hard_problem();
    impossible.sinr_floor_db = 3.0;
    CHECK_THROWS_AS(oracle_reward(ran("powers=[0, 0]"), impossible, solve_ground_truth(impossible)),
                    OracleUnavailable);
}

TEST_CASE("optimal verdicts agree with the grid reference on the examples") {
    for (const auto& spec : {example_easy_problem(), example_hard_problem()}) {
        const auto truth = solve_ground_truth(spec);
        const auto grid = testing::grid_search_oracle(spec);
        REQUIRE(grid.feasible);
        const auto r = oracle_reward(ran("powers=[" + format_shortest(grid.powers[0]) + ", " +
                                         format_shortest(grid.powers[1]) + "]\n"),
                                     spec, truth);
        CHECK(r.optimal == true);
        CHECK(r.feasible == true);
        CHECK(std::abs(*r.objective_value - truth.objective) <= 0.01 * std::max(truth.objective, 0.01));
    }
}

TEST_CASE("rewards stay in range under fuzzing") {
    SplitMix64 rng(99);
    SyntheticBackend synthetic({.seed = 4});
    const auto statuses = {ExecStatus::ok, ExecStatus::nonzero_exit, ExecStatus::timeout, ExecStatus::spawn_error};
    for (int i = 0; i < 500; ++i) {
        const auto spec = generate_problem(i % 2 == 0 ? Difficulty::easy : Difficulty::hard, rng.next() % 1000);
        const auto truth = solve_ground_truth(spec);
        ExecutionResult e;
        e.status = *(statuses.begin() + static_cast<long>(rng.next() % 4));
        if (e.status == ExecStatus::ok) {
            e.exit_code = 0;
        }
        switch (rng.next() % 4) {
            case 0:
                e.stdout_text = "powers=[" + format_shortest(rng.uniform() * 4.0 - 1.0) + ", " +
                                format_shortest(rng.uniform() * 4.0) + "]\n";
                break;
            case 1:
                e.stdout_text = "value " + std::to_string(static_cast<int>(rng.next() % 100000) - 50000);
                break;
            case 2:
                e.stdout_text = "powers=[nan, inf]";
                break;
            default:
                break;
        }
        const auto o = oracle_reward(e, spec, truth);
        CHECK(in_range(o.reward));
        CHECK((o.executed_ok || o.reward == kFailureReward));
        if (o.optimal.value_or(false)) {
            CHECK(o.feasible == true);
        }
        const std::string reply = rng.next() % 2 == 0 ? "Score: " + std::to_string(static_cast<int>(rng.next() % 41) - 20)
                                                       : "rating " + format_shortest(rng.uniform() * 30.0 - 10.0);
        testing::ScriptedBackend scripted([&](const LlmRequest&) { return reply; });
        LlmSession session(scripted);
        const auto l = llm_reward(e, spec.description, session);
        CHECK(in_range(l.reward));
        LlmSession synthetic_session(synthetic);
        CHECK(in_range(llm_reward(e, spec.description, synthetic_session).reward));
    }
}

TEST_CASE("lower objective never scores lower") {
    const auto hard = example_hard_problem();
    const auto truth = solve_ground_truth(hard);
    double previous = 11.0;
    for (double scale = 1.0; scale <= 2.5; scale += 0.05) {
        const double p1 = truth.powers[0] * scale;
        const double p2 = truth.powers[1] * scale;
        const auto r = oracle_reward(ran("powers=[" + format_shortest(p1) + ", " + format_shortest(p2) + "]"), hard,
                                     truth);
        if (r.feasible == true) {
            CHECK(r.reward <= previous);
            previous = r.reward;
        }
    }
}

TEST_CASE("graders") {
    const auto easy = example_easy_problem();
    BenchProblem problem{easy, solve_ground_truth(easy)};
    SyntheticBackend synthetic({.seed = 1});
    LlmSession session(synthetic);
    auto oracle = make_grader(GraderKind::oracle, problem);
    CHECK(oracle->grade(ran("powers=[0.0, 0.0]"), session).reward == 10.0);
    CHECK(session.calls() == 0);
    auto llm = make_grader(GraderKind::llm, problem);
    const auto r = llm->grade(ran("powers=[0.0, 0.0]"), session);
    CHECK(session.calls_for(Role::evaluator) == 1);
    CHECK(r.optimal == true);
    CHECK(r.reward == 10.0);
    CHECK(parse_grader_kind("oracle") == GraderKind::oracle);
    CHECK_THROWS_AS(parse_grader_kind("human"), ConfigError);
}
