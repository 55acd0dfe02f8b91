#pragma once

#include <stdexcept>
#include <string>

namespace renewalci {

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: bad probabilities, bad parameters, malformed files.
class invalid_input : public error {
 public:
  using error::error;
};

/// A sequence submitted as renewal probabilities has no generating
/// first-renewal distribution (inversion produced negative mass or
/// mass exceeding one).
class inconsistent_sequence : public invalid_input {
 public:
  using invalid_input::invalid_input;
};

class unknown_family : public invalid_input {
 public:
  using invalid_input::invalid_input;
};

class invalid_model : public invalid_input {
 public:
  using invalid_input::invalid_input;
};

/// Requested half-width rule is not applicable to the model
/// (e.g. Hoeffding without declared bounds).
class unsupported_rule : public invalid_input {
 public:
  using invalid_input::invalid_input;
};

/// No renewal mass in the horizon: the hidden parameter has no effect
/// on the observed data and cannot be estimated.
class non_identifiable : public error {
 public:
  using error::error;
};

/// The interval does not converge (transient renewal process).
class divergent_interval : public error {
 public:
  using error::error;
};

}  // namespace renewalci
