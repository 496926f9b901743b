#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ius {

// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad sizes, empty inputs, non-finite values).
class InvalidInput : public Error {
public:
    using Error::Error;
};

class JointLimitError : public InvalidInput {
public:
    JointLimitError(std::size_t joint, double value, const std::string& what)
        : InvalidInput(what), joint_(joint), value_(value) {}

    std::size_t joint() const { return joint_; }
    double value() const { return value_; }

private:
    std::size_t joint_;
    double value_;
};

// Chart coordinates requested outside the chart domain. Carries the nearest
// in-domain value.
class ChartDomainError : public Error {
public:
    ChartDomainError(const Eigen::Vector2d& clamped, const std::string& what)
        : Error(what), clamped_(clamped) {}

    const Eigen::Vector2d& clamped() const { return clamped_; }

private:
    Eigen::Vector2d clamped_;
};

// A point could not be attached to the chart (outside the footprint or beyond
// the vertical extent of the chart shell).
class ChartBoundaryError : public Error {
public:
    using Error::Error;
};

class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

class EmptyReconstruction : public Error {
public:
    using Error::Error;
};

class IntegratorDivergence : public Error {
public:
    IntegratorDivergence(long step, const std::string& what) : Error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// A scenario stage ran past its wall-clock budget.
class StageTimeout : public Error {
public:
    using Error::Error;
};

}  // namespace ius
