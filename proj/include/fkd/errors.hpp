#pragma once

#include <stdexcept>
#include <string>

namespace fkd {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent input (non-finite values, shape mismatch, bad parameters).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// A protected attribute carries no removable information at some iteration
/// (constant column, or the normalization term blew past its cap).
class DegenerateAttributeError : public Error {
public:
    DegenerateAttributeError(const std::string& msg, int iteration)
        : Error(msg), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// Protected-attribute directions are linearly dependent, so the l-by-l
/// normalization matrix is singular.
class CollinearityError : public Error {
public:
    CollinearityError(const std::string& msg, int iteration)
        : Error(msg), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// The landmark submatrix of a low-rank inverse is numerically singular.
class LandmarkError : public Error {
public:
    explicit LandmarkError(const std::string& msg) : Error(msg) {}
};

/// A kernel violates positive semi-definiteness beyond repairable tolerance.
class ConvexityError : public Error {
public:
    explicit ConvexityError(const std::string& msg) : Error(msg) {}
};

/// An iterative solver hit its iteration cap; carries the best duality gap seen.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double duality_gap)
        : Error(msg), duality_gap_(duality_gap) {}
    double duality_gap() const { return duality_gap_; }

private:
    double duality_gap_;
};

/// File or parse problem.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace fkd
