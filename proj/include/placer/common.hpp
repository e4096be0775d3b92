#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace placer {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class ErrorCode {
  ParseError,
  ValidationError,
  CycleError,
  IndexError,
  InvalidParams,
  InfeasibleInstance,
  StateError,
  IncompletePlacement,
  DimensionError,
  DeadEnd,
  NonFiniteGradient,
  NonFiniteValue,
  TooLarge,
  NoFeasibleSample,
  IoError,
};

const char* error_code_name(ErrorCode code);

class PlacerError : public std::runtime_error {
 public:
  PlacerError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw PlacerError(code, message);
}

}  // namespace placer
