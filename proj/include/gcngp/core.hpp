#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gcngp {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ErrorCode {
  EmptyGraph,
  InvalidG,
  InvalidProbability,
  ParseError,
  SelfLoop,
  DimensionMismatch,
  InvalidArgument,
  NonPsdInput,
  NotConverged,
  NotAFixedPoint,
  NoConvergence,
  InvalidBracket,
  DefectiveSpectrum,
  NoRoot,
  SingularSystem,
};

/// True for errors caused by bad user input rather than numerical trouble.
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyGraph:
    case ErrorCode::InvalidG:
    case ErrorCode::InvalidProbability:
    case ErrorCode::ParseError:
    case ErrorCode::SelfLoop:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
      return true;
    default:
      return false;
  }
}

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Fixed-point iteration ran out of budget; keeps the last residual.
class NotConverged : public Error {
 public:
  NotConverged(double residual, int layers, const std::string& what)
      : Error(ErrorCode::NotConverged, what), residual_(residual), layers_(layers) {}
  double residual() const noexcept { return residual_; }
  int layers() const noexcept { return layers_; }

 private:
  double residual_;
  int layers_;
};

/// splitmix64 finalizer; derives independent stream seeds from (master, counter).
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace gcngp
