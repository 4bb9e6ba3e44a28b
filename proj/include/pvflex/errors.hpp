#pragma once

#include <stdexcept>
#include <string>

namespace pvflex {

// Input data is malformed or violates a series invariant.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure inside the optimizer (cycling, node budget, infeasibility
// that should not occur for validated inputs). Never used to mask a wrong answer.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Bad run configuration (unknown scenario, malformed grid spec, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pvflex
