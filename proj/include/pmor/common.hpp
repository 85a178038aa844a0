#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pmor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base class for every error raised by the library. Callers that only care
// about "something went wrong in pmor" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `offset` is a byte offset for binary input and a
// 1-based line number for text input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Raised when a time integration leaves the finite / bounded region.
class UnstableRomError : public Error {
 public:
  UnstableRomError(const std::string& what, double last_valid_time)
      : Error(what + " (last valid time " + std::to_string(last_valid_time) + ")"),
        last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

}  // namespace pmor
