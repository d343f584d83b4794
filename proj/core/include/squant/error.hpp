#pragma once

#include <stdexcept>

namespace squant {

/// Raised for invalid numerical inputs (empty samples, out-of-range levels, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace squant
