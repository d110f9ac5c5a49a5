#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryError : Error {
  using Error::Error;
};

struct MeshError : Error {
  using Error::Error;
};

struct AssemblyError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct NotFoundError : Error {
  using Error::Error;
};

/// Linear-solver failure; carries the state at abort.
struct SolverError : Error {
  double residual = 0.0;
  int iterations = 0;
  SolverError(const std::string& msg, double res, int iters)
      : Error(msg), residual(res), iterations(iters) {}
};

/// Fixed-point iteration failure; carries the update-norm trace.
struct PicardError : Error {
  std::vector<double> trace;
  PicardError(const std::string& msg, std::vector<double> tr)
      : Error(msg), trace(std::move(tr)) {}
};

}  // namespace homog
