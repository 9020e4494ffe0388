#pragma once

#include <stdexcept>
#include <string>

namespace shed {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter vector entry violates its ParamSpace dim.
class InvalidParameterError : public Error {
public:
    InvalidParameterError(const std::string& dim, const std::string& msg)
        : Error("invalid parameter '" + dim + "': " + msg), dim_name(dim) {}
    std::string dim_name;
};

// step() called on a finished environment instance.
class IllegalTransitionError : public Error {
public:
    using Error::Error;
};

// Maze difficulty constraints could not be satisfied within the retry budget.
class InfeasibleSpecError : public Error {
public:
    using Error::Error;
};

// Grid is missing a start/end marker or has duplicates.
class MalformedGridError : public Error {
public:
    using Error::Error;
};

class InvalidDeltaError : public Error {
public:
    using Error::Error;
};

class TooManyEnvironmentsError : public Error {
public:
    using Error::Error;
};

// A probe point fell outside every grid interval; indicates a grid bug.
class CoverageViolationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InsufficientDimensionsError : public Error {
public:
    using Error::Error;
};

// Non-finite loss during an update; carries the offending minibatch index.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& msg, int minibatch)
        : Error(msg + " (minibatch " + std::to_string(minibatch) + ")"),
          minibatch_index(minibatch) {}
    int minibatch_index;
};

class CannotTrainError : public Error {
public:
    using Error::Error;
};

class NoRealDataError : public Error {
public:
    using Error::Error;
};

class InvalidScheduleError : public Error {
public:
    using Error::Error;
};

class IncompatibleLogsError : public Error {
public:
    using Error::Error;
};

// Config file contained keys outside the documented schema.
class ConfigParseError : public Error {
public:
    using Error::Error;
};

} // namespace shed
