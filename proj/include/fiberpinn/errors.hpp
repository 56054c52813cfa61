#pragma once

#include <stdexcept>
#include <string>

namespace fiberpinn {

/// Malformed or inconsistent configuration; message carries the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss, aliasing window, refinement cap: the numbers went bad.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WindowError : public NumericalError {
 public:
  WindowError(const std::string& what, double distance)
      : NumericalError(what), distance_(distance) {}
  double distance() const { return distance_; }

 private:
  double distance_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fiberpinn
