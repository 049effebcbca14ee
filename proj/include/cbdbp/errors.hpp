#pragma once

#include <stdexcept>

namespace cbdbp {

/// A computation produced non-finite values or failed to make progress.
/// Configuration mistakes are reported as std::invalid_argument instead.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cbdbp
