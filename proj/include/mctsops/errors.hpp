#pragma once

#include <stdexcept>
#include <string>

namespace mctsops {

// Base for every error raised by the engine. Callers that only need to know
// "something in the pipeline failed" catch this.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractViolation : Error {
    using Error::Error;
};

// search tree
struct NoChildren : Error {
    using Error::Error;
};
struct DepthExceeded : Error {
    using Error::Error;
};
struct EmptyTree : Error {
    using Error::Error;
};

// llm gateway
struct GatewayError : Error {
    using Error::Error;
};
struct FixtureMiss : Error {
    using Error::Error;
};
struct ParseFailure : Error {
    using Error::Error;
};

// pipeline / benchmarks / grading
struct DecomposeFailure : Error {
    using Error::Error;
};
struct GenerationExhausted : Error {
    using Error::Error;
};
struct OracleUnavailable : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace mctsops
