#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "homog/errors.hpp"

namespace homog {

enum class VolumeKind { LINEAR_EXCHANGE, SATURATING };
enum class SurfaceKind { LINEAR, SATURATING };

struct VolumeReaction {
  VolumeKind kind = VolumeKind::LINEAR_EXCHANGE;
  std::vector<double> kappa;  // exchange rates, one per partner species
  double sigma = 0.0;         // saturating drive
  double lambda = 0.0;        // saturating decay
};

struct SurfaceReaction {
  SurfaceKind kind = SurfaceKind::LINEAR;
};

/// Volume reactions R_i and surface reactions F_i for N coupled species,
/// with certified global Lipschitz constants. Species indices are 0-based;
/// the saturating volume kind couples species i to species (i+1) mod N.
struct ReactionSystem {
  int N = 2;
  std::vector<VolumeReaction> volume;
  std::vector<SurfaceReaction> surface;
  std::vector<double> lipschitz_volume;   // must dominate the analytic bound
  std::vector<double> lipschitz_surface;  // must be >= 1

  void validate() const;
  /// Fills lipschitz_* with the analytic bounds of the configured kinds.
  void set_default_lipschitz();

  double eval_R(int i, const std::vector<double>& u) const;
  double eval_F(int i, double u) const;
  /// dF_i/du
  double surface_derivative(int i, double u) const;
  /// dR_i/du_j at state u
  double volume_jacobian(int i, int j, const std::vector<double>& u) const;
};

struct PicardConfig {
  double theta = 1.0;  // damping in (0, 1]
  double tol = 1e-8;   // relative update tolerance
  int max_iter = 50;

  void validate() const;
};

using State = std::vector<Eigen::VectorXd>;
/// reactions: current state -> frozen-reaction load vectors;
/// apply: load vectors -> linearized solutions.
using StateMap = std::function<State(const State&)>;
using StateNorm = std::function<double(const State&)>;

struct PicardResult {
  State solution;
  std::vector<double> trace;  // relative update norm per iteration
  int iterations = 0;
  bool restarted = false;  // fell back to theta = 0.5
};

/// Damped fixed-point iteration u <- (1-theta) u + theta apply(reactions(u)).
/// Stops when the relative update norm drops below cfg.tol. Starts at
/// cfg.theta (default 1) and restarts once from u0 with theta = 0.5 when the
/// trace turns non-monotone after the second iteration. Throws PicardError
/// with the trace on NaN or on exceeding max_iter.
PicardResult picard_solve(const StateMap& apply, const StateMap& reactions,
                          const State& u0, const PicardConfig& cfg,
                          const StateNorm& norm = {});

}  // namespace homog
