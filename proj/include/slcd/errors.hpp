#pragma once

#include <stdexcept>
#include <string>

namespace slcd {

/// Raised when an objective or gradient evaluation meets non-finite values.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slcd
