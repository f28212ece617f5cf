#pragma once

#include <stdexcept>
#include <string>

namespace memsieve {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Judge output without a well-formed VERDICT line.
struct JudgeParseError : Error {
    using Error::Error;
};

// No intent and no candidate intents: the sentence cannot be routed to a
// cluster prompt. The pipeline maps this to decision 0.
struct UnroutableError : Error {
    using Error::Error;
};

}  // namespace memsieve
