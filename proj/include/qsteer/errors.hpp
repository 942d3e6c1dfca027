#pragma once

#include <stdexcept>
#include <string>

namespace qsteer {

/// Input violates a documented precondition (bad parameter range, singular
/// operator, malformed state, degenerate configuration for the requested task).
class invalid_input : public std::runtime_error {
public:
  explicit invalid_input(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix that should describe a physical two-qubit state fails its
/// positivity / normalization checks beyond tolerance.
class unphysical_state : public invalid_input {
public:
  explicit unphysical_state(const std::string& what) : invalid_input(what) {}
};

/// An internal numerical contract (eigensolver residual, reconstruction
/// residual, frame normalization) could not be met.
class numerical_failure : public std::runtime_error {
public:
  explicit numerical_failure(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace qsteer
