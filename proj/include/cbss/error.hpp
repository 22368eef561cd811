#pragma once

#include <stdexcept>
#include <string>

namespace cbss {

// Shape or size disagreement between operands.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Input is well-formed but the computation cannot proceed: singular or
// indefinite matrices, non-convergence, undefined phases.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed files or configs.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Too many Monte-Carlo replications failed to produce an estimate.
class ReplicationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace cbss
