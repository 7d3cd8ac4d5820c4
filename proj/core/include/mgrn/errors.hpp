#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mgrn {

/// Contract violation: mismatched shapes or an ill-formed domain value.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed-form expression evaluated outside its domain of validity.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownTickerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training loss became NaN/inf; carries the epoch where it happened.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch(epoch) {}
  int epoch;
};

/// exp() would overflow during path generation; carries the step index.
class NumericOverflowError : public std::runtime_error {
 public:
  NumericOverflowError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step(step) {}
  std::size_t step;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

[[noreturn]] inline void shape_mismatch(const char* op, std::size_t lhs_rows,
                                        std::size_t lhs_cols, std::size_t rhs) {
  throw ShapeError(std::string(op) + ": shape mismatch, " +
                   std::to_string(lhs_rows) + "x" + std::to_string(lhs_cols) +
                   " vs length " + std::to_string(rhs));
}

[[noreturn]] inline void length_mismatch(const char* op, std::size_t a,
                                         std::size_t b) {
  throw ShapeError(std::string(op) + ": length mismatch, " + std::to_string(a) +
                   " vs " + std::to_string(b));
}

}  // namespace detail
}  // namespace mgrn
