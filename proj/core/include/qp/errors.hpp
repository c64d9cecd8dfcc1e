#pragma once

#include <stdexcept>
#include <string>

namespace qp {

// Bad user input / violated precondition.  The CLI maps these to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numeric guard tripped (rescale cadence overflow, pole hit, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qp
