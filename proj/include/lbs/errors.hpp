#pragma once

#include <stdexcept>
#include <string>

namespace lbs {

// Every error thrown by the library derives from Error so the CLI can map
// categories onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (bad step, unknown key, negative intensity, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A call received an argument outside its documented domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Objects built from different inputs were combined.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Root bracketing or grid extent failed.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a solver (singular regression, non-finite values).
class SolverError : public Error {
public:
    using Error::Error;
};

/// The Levy driver carries no randomness (sigma = 0 and no atoms).
class DegenerateDriverError : public Error {
public:
    DegenerateDriverError() : Error("degenerate driver: sigma = 0 and no jump atoms") {}
};

} // namespace lbs
