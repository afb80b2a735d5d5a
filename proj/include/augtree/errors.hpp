#pragma once

#include <stdexcept>
#include <string>

namespace augtree {

/// Bad input: malformed model, parameter out of range, unknown vertex.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that cannot produce a value (singular system, underflow,
/// undecided classification where a decision was demanded).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace augtree
