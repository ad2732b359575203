#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vaemi {

/// Malformed file contents (bad magic, header, shape or number syntax).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quadrature that failed to reach its tolerance within the refinement limit.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved_tolerance)
        : std::runtime_error(what), achieved_tolerance_(achieved_tolerance) {}

    double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

/// The beta-ELBO trainer produced a non-finite objective.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Evaluation could not proceed, e.g. a class with no training samples.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vaemi
