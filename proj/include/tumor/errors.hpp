#pragma once

#include <stdexcept>
#include <string>

namespace tumor {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Request beyond a configured capability (e.g. mode index above n_max).
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nutrient schedule that is not continuous, periodic and strictly positive.
class InvalidSchedule : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid model parameters (mu <= 0, gamma <= 0, sigma_tilde < 0).
class InvalidParams : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Integrator step size collapsed.
class StiffnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No positive periodic radius exists for these parameters.
class NoPeriodicSolution : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A guaranteed sign or containment condition failed numerically.
class AccuracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The self-consistent critical mu could not be bracketed.
class NoThreshold : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tumor
