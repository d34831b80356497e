#pragma once

#include <stdexcept>
#include <string>

namespace lmas {

// Base class for every error raised by the engine.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
    using Error::Error;
};
struct NotSPD : Error {
    using Error::Error;
};
struct InvalidArgument : Error {
    using Error::Error;
};

// Weight / memory file errors.
struct FormatError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Model runtime errors.
struct IdOutOfRange : Error {
    using Error::Error;
};
struct PositionOverflow : Error {
    using Error::Error;
};
struct LatentDivergence : Error {
    using Error::Error;
};

// Memory transfer errors.
struct ConfigMismatch : Error {
    using Error::Error;
};
struct NonEmptyContext : Error {
    using Error::Error;
};

// Alignment / analysis errors.
struct EmptySample : Error {
    using Error::Error;
};
struct TooLarge : Error {
    using Error::Error;
};
struct BadDistribution : Error {
    using Error::Error;
};
struct BadVocab : Error {
    using Error::Error;
};

// Orchestration errors.
struct BadTemplate : Error {
    using Error::Error;
};

} // namespace lmas
