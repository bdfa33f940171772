#pragma once

#include <stdexcept>
#include <string>

namespace jobswitch {

/// Rejected input: parameters, configuration or arguments outside their domain.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to converge or to bracket a root.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace jobswitch
