#include "homog/nonlinear.hpp"

#include <cmath>

namespace homog {

void ReactionSystem::validate() const {
  if (N < 2) throw ConfigError("reactions: species count must be >= 2");
  if (static_cast<int>(volume.size()) != N ||
      static_cast<int>(surface.size()) != N) {
    throw ConfigError("reactions: need one volume and one surface kind per species");
  }
  if (static_cast<int>(lipschitz_volume.size()) != N ||
      static_cast<int>(lipschitz_surface.size()) != N) {
    throw ConfigError("reactions: Lipschitz metadata missing");
  }
  for (int i = 0; i < N; ++i) {
    const auto& v = volume[i];
    double analytic = 0.0;
    if (v.kind == VolumeKind::LINEAR_EXCHANGE) {
      if (static_cast<int>(v.kappa.size()) != N) {
        throw ConfigError("reactions.volume.kappa must list one rate per species");
      }
      double sum = 0.0;
      for (double k : v.kappa) {
        if (k < 0.0) throw ConfigError("reactions.volume.kappa entries must be >= 0");
        sum += k;
      }
      analytic = 2.0 * sum;
    } else {
      if (v.sigma < 0.0 || v.lambda < 0.0) {
        throw ConfigError("reactions.volume sigma and lambda must be >= 0");
      }
      analytic = v.sigma + v.lambda;
    }
    if (lipschitz_volume[i] < analytic) {
      throw ConfigError("reactions: stored volume Lipschitz constant below the analytic bound");
    }
    if (lipschitz_surface[i] < 1.0) {
      throw ConfigError("reactions: stored surface Lipschitz constant below 1");
    }
  }
}

void ReactionSystem::set_default_lipschitz() {
  lipschitz_volume.assign(N, 0.0);
  lipschitz_surface.assign(N, 1.0);
  for (int i = 0; i < N; ++i) {
    const auto& v = volume[i];
    if (v.kind == VolumeKind::LINEAR_EXCHANGE) {
      double sum = 0.0;
      for (double k : v.kappa) sum += k;
      lipschitz_volume[i] = 2.0 * sum;
    } else {
      lipschitz_volume[i] = v.sigma + v.lambda;
    }
  }
}

double ReactionSystem::eval_R(int i, const std::vector<double>& u) const {
  const auto& v = volume[i];
  if (v.kind == VolumeKind::LINEAR_EXCHANGE) {
    double r = 0.0;
    for (int j = 0; j < N; ++j) r += v.kappa[j] * (u[j] - u[i]);
    return r;
  }
  return v.sigma * std::tanh(u[(i + 1) % N]) - v.lambda * u[i];
}

double ReactionSystem::eval_F(int i, double u) const {
  return surface[i].kind == SurfaceKind::LINEAR ? u : std::tanh(u);
}

double ReactionSystem::surface_derivative(int i, double u) const {
  if (surface[i].kind == SurfaceKind::LINEAR) return 1.0;
  const double c = std::cosh(u);
  return 1.0 / (c * c);
}

double ReactionSystem::volume_jacobian(int i, int j,
                                       const std::vector<double>& u) const {
  const auto& v = volume[i];
  if (v.kind == VolumeKind::LINEAR_EXCHANGE) {
    if (j == i) {
      double sum = 0.0;
      for (int k = 0; k < N; ++k) {
        if (k != i) sum += v.kappa[k];
      }
      return -sum;
    }
    return v.kappa[j];
  }
  const int partner = (i + 1) % N;
  double deriv = 0.0;
  if (j == partner) {
    const double c = std::cosh(u[partner]);
    deriv += v.sigma / (c * c);
  }
  if (j == i) deriv -= v.lambda;
  return deriv;
}

void PicardConfig::validate() const {
  if (!(theta > 0.0) || theta > 1.0) {
    throw ConfigError("picard.theta must lie in (0, 1]");
  }
  if (!(tol > 0.0)) throw ConfigError("picard.tol must be > 0");
  if (max_iter < 1) throw ConfigError("picard.max_iter must be >= 1");
}

namespace {

double default_norm(const State& u) {
  double s = 0.0;
  for (const auto& v : u) s += v.squaredNorm();
  return std::sqrt(s);
}

bool finite(const State& u) {
  for (const auto& v : u) {
    if (!v.allFinite()) return false;
  }
  return true;
}

}  // namespace

PicardResult picard_solve(const StateMap& apply, const StateMap& reactions,
                          const State& u0, const PicardConfig& cfg,
                          const StateNorm& norm_in) {
  cfg.validate();
  const StateNorm norm = norm_in ? norm_in : StateNorm(default_norm);

  PicardResult res;
  double theta = cfg.theta;
  State u = u0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    State v = apply(reactions(u));
    State next(u.size());
    double diff = 0.0;
    {
      State delta(u.size());
      for (size_t s = 0; s < u.size(); ++s) {
        next[s] = (1.0 - theta) * u[s] + theta * v[s];
        delta[s] = next[s] - u[s];
      }
      diff = norm(delta);
    }
    if (!finite(next)) {
      throw PicardError("picard_solve: iteration diverged (non-finite values)",
                        std::move(res.trace));
    }
    const double scale = std::max(norm(next), 1e-300);
    res.trace.push_back(diff / scale);
    u = std::move(next);
    ++res.iterations;
    if (res.trace.back() <= cfg.tol) {
      res.solution = std::move(u);
      return res;
    }
    const size_t k = res.trace.size();
    if (k >= 3 && res.trace[k - 1] > res.trace[k - 2] && !res.restarted &&
        theta == 1.0) {
      theta = 0.5;
      res.restarted = true;
      res.trace.clear();
      res.iterations = 0;
      u = u0;
    }
  }
  throw PicardError("picard_solve: no convergence in " +
                        std::to_string(cfg.max_iter) + " iterations",
                    std::move(res.trace));
}

}  // namespace homog
