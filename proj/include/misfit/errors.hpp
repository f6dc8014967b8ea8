#pragma once

#include <stdexcept>
#include <string>

namespace misfit {

// Bad arguments, bad config, bad names. CLI maps this to exit code 1.
class UserError : public std::runtime_error {
 public:
  explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem trouble. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or gradient during optimization. CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, long step)
      : std::runtime_error(msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace misfit
