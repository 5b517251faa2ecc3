#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace laclab {

/// Precondition or parameter-range violation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A desk-scale size guard or the fixed-point guard-bit rule was violated.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation hit a singular point of a catalog function (heavy tail at 1/2).
class SingularityError : public std::domain_error {
 public:
  explicit SingularityError(const std::string& what, std::size_t index = 0)
      : std::domain_error(what), index_(index) {}

  /// 1-based sequence index of the offending term, 0 when not applicable.
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace laclab
