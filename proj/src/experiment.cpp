#include "mctsops/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "mctsops/errors.hpp"

namespace mctsops {

std::vector<TrialRecord> run_method(Method method, const std::vector<BenchProblem>& problems,
                                    const ExperimentConfig& config, TrialContext ctx) {
    config.search.validate();
    config.refine.validate();
    if (config.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    std::vector<TrialRecord> out(problems.size());
    auto run_one = [&](std::size_t i) {
        const BenchProblem& p = problems[i];
        auto grader = make_grader(config.grader, p, ctx.templates);
        switch (method) {
            case Method::one_shot:
                out[i] = one_shot(p.spec, *grader, ctx);
                break;
            case Method::cot:
                out[i] = chain_of_thought(p.spec, *grader, ctx);
                break;
            case Method::self_refine:
                out[i] = self_refine(p.spec, *grader, config.refine, ctx);
                break;
            case Method::mcts_ops:
            case Method::no_mcts:
                out[i] = search_trial(p.spec, *grader, config.search, config.refine, ctx, method, config.pipeline);
                break;
            case Method::no_refine: {
                RefineConfig off = config.refine;
                off.enabled = false;
                out[i] = search_trial(p.spec, *grader, config.search, off, ctx, method, config.pipeline);
                break;
            }
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), problems.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < problems.size(); ++i) {
            run_one(i);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < problems.size(); i = next++) {
                try {
                    run_one(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next = problems.size();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

AblationMode parse_ablation_mode(std::string_view text) {
    if (text == "no_mcts") {
        return AblationMode::no_mcts;
    }
    if (text == "no_refine") {
        return AblationMode::no_refine;
    }
    throw ConfigError("unknown ablation mode '" + std::string(text) + "'");
}

Method method_for(AblationMode mode) {
    return mode == AblationMode::no_mcts ? Method::no_mcts : Method::no_refine;
}

MetricsTable ablate(AblationMode mode, const std::vector<BenchProblem>& problems, const ExperimentConfig& config,
                    TrialContext ctx, std::vector<TrialRecord>* records) {
    auto rs = run_method(method_for(mode), problems, config, ctx);
    MetricsTable table = aggregate(rs);
    if (records != nullptr) {
        *records = std::move(rs);
    }
    return table;
}

}  // namespace mctsops
