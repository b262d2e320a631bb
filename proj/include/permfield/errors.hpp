#pragma once

#include <stdexcept>
#include <string>

namespace permfield {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonTransient : ModelError {
    using ModelError::ModelError;
};
struct NegativeRate : ModelError {
    using ModelError::ModelError;
};
struct NonpositiveWeight : ModelError {
    using ModelError::ModelError;
};
struct SingularGenerator : ModelError {
    using ModelError::ModelError;
};
struct UnderflowBridge : ModelError {
    using ModelError::ModelError;
};

struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IdentityViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotAMetric : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct HeavyTail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace permfield
