#include "mctsops/refine.hpp"

#include "mctsops/errors.hpp"

namespace mctsops {

void RefineConfig::validate() const {
    if (max_retries < 0) {
        throw ConfigError("refine.max_retries must be >= 0");
    }
    if (!(tau >= 0.0 && tau <= 10.0)) {
        throw ConfigError("refine.tau must lie in [0, 10]");
    }
}

RefineOutcome refine_loop(ScoredScript initial, const RefineConfig& cfg, RefineContext ctx) {
    cfg.validate();
    RefineOutcome out;
    out.best = initial;
    if (!cfg.enabled) {
        return out;
    }
    ScoredScript current = std::move(initial);
    while (current.report.reward < cfg.tau && out.retries_used < cfg.max_retries) {
        ScoredScript next;
        try {
            const LlmResponse fb = ctx.session.complete(requests::feedback(
                ctx.templates, ctx.problem_text, current.code, current.report.reward, current.exec));
            const LlmResponse revised = ctx.session.complete(requests::revise(
                ctx.templates, ctx.problem_text, current.code, fb.text, ctx.sample_base + out.retries_used));
            next.code = strip_code_fences(revised.text);
            next.exec = ctx.sandbox.execute(next.code);
            next.report = ctx.grader.grade(next.exec, ctx.session);
        } catch (const GatewayError&) {
            break;
        } catch (const ParseFailure&) {
            break;
        }
        ++out.retries_used;
        if (next.report.reward > out.best.report.reward) {
            out.best = next;
        }
        current = std::move(next);
    }
    return out;
}

}  // namespace mctsops
