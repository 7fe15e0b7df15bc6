#pragma once

#include <stdexcept>
#include <string>

namespace coopemit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sampler could not place the emitters above the minimum pair distance.
class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

class SizeLimitExceeded : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// The generator has more than one stationary state.
class DegenerateSteadyState : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class NonHermitianError : public Error {
public:
    using Error::Error;
};

// A system matrix that should be invertible is numerically singular.
class ConditioningError : public Error {
public:
    using Error::Error;
};

// The adiabatic elimination time-scale hierarchy does not hold.
class ValidityGateError : public Error {
public:
    using Error::Error;
};

}  // namespace coopemit
