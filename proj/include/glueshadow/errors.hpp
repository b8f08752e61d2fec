#pragma once

#include <stdexcept>
#include <string>

namespace glueshadow {

/// Caller violated a documented precondition (bad window, mismatched spaces, ...).
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the domain or image an operation requires.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Root finding or another iterative method could not certify its result.
class numerical_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No gluing trajectory could be built. `index` is the time index at which
/// the construction broke, `level` the merge level (-1 outside shadowing).
class gluing_failure : public numerical_failure {
 public:
  gluing_failure(const std::string& what, long index, int level = -1)
      : numerical_failure(what), index_(index), level_(level) {}

  long index() const noexcept { return index_; }
  int level() const noexcept { return level_; }

 private:
  long index_;
  int level_;
};

}  // namespace glueshadow
