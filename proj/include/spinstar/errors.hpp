// errors.hpp: exception types shared by all spinstar modules

#pragma once

#include <stdexcept>
#include <string>

namespace spinstar {

/// Invalid sector label, parameter, or time grid.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Solver produced a non-finite value or its step size underflowed.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problem size exceeds what a dense/brute-force routine accepts.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

} // namespace spinstar
