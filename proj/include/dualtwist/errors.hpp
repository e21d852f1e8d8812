#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dualtwist {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed chain/scenario/config data or mismatched vector lengths.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

class InputError : public Error {
public:
  using Error::Error;
};

/// Zero-length segments, coincident points and other inputs with no defined direction.
class DegenerateGeometryError : public Error {
public:
  using Error::Error;
};

class SingularConfigurationError : public Error {
public:
  using Error::Error;
};

/// IK did not converge. Carries the best clamped configuration seen and its residual.
class UnreachableTargetError : public Error {
public:
  UnreachableTargetError(const std::string& what, double residual, Eigen::VectorXd best)
      : Error(what), residual_(residual), best_(std::move(best)) {}

  double residual() const noexcept { return residual_; }
  const Eigen::VectorXd& best() const noexcept { return best_; }

private:
  double residual_;
  Eigen::VectorXd best_;
};

class InfeasibleError : public Error {
public:
  InfeasibleError(const std::string& what, std::vector<std::string> violated)
      : Error(what), violated_(std::move(violated)) {}

  const std::vector<std::string>& violated() const noexcept { return violated_; }

private:
  std::vector<std::string> violated_;
};

/// Operation not valid for the current grasp/task state.
class StateError : public Error {
public:
  using Error::Error;
};

class OverstretchError : public StateError {
public:
  OverstretchError(const std::string& what, double separation)
      : StateError(what), separation_(separation) {}
  double separation() const noexcept { return separation_; }

private:
  double separation_;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

}  // namespace dualtwist
