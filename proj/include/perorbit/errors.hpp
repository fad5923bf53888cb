#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perorbit {

/// Base class for every failure raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// core numerics

class StepSizeUnderflow : public Error {
public:
    StepSizeUnderflow(double t, double h)
        : Error("adaptive step underflow at t=" + std::to_string(t) + " (h=" + std::to_string(h) + ")"),
          t_(t) {}
    double t() const noexcept { return t_; }

private:
    double t_;
};

class NonFiniteState : public Error {
public:
    explicit NonFiniteState(double t)
        : Error("state left the finite range at t=" + std::to_string(t)), t_(t) {}
    double t() const noexcept { return t_; }

private:
    double t_;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

// linear periodic solver

class Resonance : public Error {
public:
    explicit Resonance(double conditioning)
        : Error("linear periodic operator is resonant (|y2(T) - 1| = " + std::to_string(conditioning) + ")"),
          conditioning_(conditioning) {}
    double conditioning() const noexcept { return conditioning_; }

private:
    double conditioning_;
};

class DegenerateDenominator : public Error {
public:
    using Error::Error;
};

// continuation

class NewtonLinearFailure : public Error {
public:
    using Error::Error;
};

class NewtonFail : public Error {
public:
    NewtonFail(const std::string& what, double last_residual, bool singular, bool capped = false)
        : Error(what), last_residual_(last_residual), singular_(singular), capped_(capped) {}
    double last_residual() const noexcept { return last_residual_; }
    /// True when an iterate hit the singularity guard or produced non-finite values.
    bool singular() const noexcept { return singular_; }
    /// True when an iterate exceeded the mu or U blow-up caps.
    bool capped() const noexcept { return capped_; }

private:
    double last_residual_;
    bool singular_;
    bool capped_;
};

class RefinementFail : public Error {
public:
    using Error::Error;
};

class NoInteriorMax : public Error {
public:
    using Error::Error;
};

// planar systems

class RestPointMismatch : public Error {
public:
    using Error::Error;
};

class AngularStall : public Error {
public:
    using Error::Error;
};

class DegenerateParameters : public Error {
public:
    using Error::Error;
};

// expression language

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& expected)
        : Error("syntax error at offset " + std::to_string(offset) + ": expected " + expected),
          offset_(offset), expected_(expected) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(const std::string& name, std::size_t offset)
        : Error("unknown identifier '" + name + "' at offset " + std::to_string(offset)),
          name_(name), offset_(offset) {}
    const std::string& name() const noexcept { return name_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string name_;
    std::size_t offset_;
};

class NonFiniteValue : public Error {
public:
    explicit NonFiniteValue(const std::string& subexpression)
        : Error("non-finite value in '" + subexpression + "'"), subexpression_(subexpression) {}
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

}  // namespace perorbit
