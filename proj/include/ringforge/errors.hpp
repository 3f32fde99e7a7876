#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ringforge {

/// Base class for all ringforge errors.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or inputs that violate a documented precondition.
/// Maps to CLI exit code 2.
class validation_error : public error {
public:
  using error::error;
};

/// File access or parse problems. Maps to CLI exit code 1.
class io_error : public error {
public:
  using error::error;
};

/// A numerical fit failed or produced an unphysical result. The message
/// carries the diagnostic; no fabricated fit is returned. CLI exit code 1.
class fit_error : public error {
public:
  using error::error;
};

/// An operation found more than one admissible answer. `candidates`
/// carries the competing values (resistivities, dip frequencies, ...).
class ambiguity_error : public error {
public:
  ambiguity_error(const std::string& message, std::vector<double> cands)
      : error(message), candidates(std::move(cands)) {}
  std::vector<double> candidates;
};

}  // namespace ringforge
