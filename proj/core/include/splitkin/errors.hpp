#pragma once

#include <stdexcept>
#include <string>

namespace splitkin {

/// Base class for all splitkin errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteEvaluation : Error {
    using Error::Error;
};
struct RangeEmpty : Error {
    using Error::Error;
};
struct GridMismatch : Error {
    using Error::Error;
};
struct InvalidExponent : Error {
    using Error::Error;
};
struct NonPositiveWidth : Error {
    using Error::Error;
};
struct CflViolation : Error {
    using Error::Error;
};
struct NonFiniteState : Error {
    using Error::Error;
};
struct QuadratureRangeExceeded : Error {
    using Error::Error;
};
struct MissingAccumulators : Error {
    using Error::Error;
};
struct ResolutionTooCoarse : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
// Internal logic failure: the splitting loop did not land on the horizon.
struct HorizonNotReached : Error {
    using Error::Error;
};

}  // namespace splitkin
