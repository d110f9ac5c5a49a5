#include "homog/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace homog {

void UnitCellGeometry::validate() const {
  if (!(hole_radius >= 0.0)) {
    throw GeometryError("hole_radius must be non-negative");
  }
  if (hole_radius >= 0.5) {
    throw GeometryError("hole_radius must be < 0.5 so the hole stays inside the cell");
  }
  if (has_hole()) {
    const double margin = std::min(std::min(hole_center.x, 1.0 - hole_center.x),
                                   std::min(hole_center.y, 1.0 - hole_center.y));
    if (!(margin > hole_radius)) {
      throw GeometryError("hole must be strictly interior to the unit cell");
    }
  }
}

WrapResult wrap_to_cell(Vec2 x, double eps) {
  if (!(eps > 0.0)) throw GeometryError("eps must be positive");
  const double sx = x.x / eps;
  const double sy = x.y / eps;
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  WrapResult r;
  r.cell = {static_cast<long>(fx), static_cast<long>(fy)};
  r.y = {sx - fx, sy - fy};
  return r;
}

int cells_per_side_for(double eps) {
  if (!(eps > 0.0) || !(eps <= 1.0)) {
    throw ConfigError("eps must lie in (0, 1]");
  }
  const double inv = 1.0 / eps;
  const double n = std::round(inv);
  if (std::abs(inv - n) > 1e-9 * n) {
    throw ConfigError("1/eps must be an integer");
  }
  return static_cast<int>(n);
}

PerforatedDomainGeometry PerforatedDomainGeometry::make(const UnitCellGeometry& cell,
                                                        double eps) {
  cell.validate();
  PerforatedDomainGeometry g;
  g.cell = cell;
  g.epsilon = eps;
  g.cells_per_side = cells_per_side_for(eps);
  return g;
}

double cutoff_profile(double t) {
  if (t <= 1.0) return 0.0;
  if (t >= 2.0) return 1.0;
  const double s = t - 1.0;
  return s * s * (3.0 - 2.0 * s);
}

double cutoff_profile_derivative(double t) {
  if (t <= 1.0 || t >= 2.0) return 0.0;
  const double s = t - 1.0;
  return 6.0 * s * (1.0 - s);
}

BoundaryCutoff::BoundaryCutoff(double eps) : epsilon(eps) {
  if (!(eps > 0.0)) throw GeometryError("cutoff eps must be positive");
}

namespace {

// Distances to the four sides of (0,1)^2 in the fixed tie-break order.
std::array<double, 4> side_distances(Vec2 x) {
  return {x.x, 1.0 - x.x, x.y, 1.0 - x.y};
}

const Vec2 kSideGradients[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};

}  // namespace

double BoundaryCutoff::value(Vec2 x) const {
  const auto d = side_distances(x);
  const double dist = std::min(std::min(d[0], d[1]), std::min(d[2], d[3]));
  return cutoff_profile(dist / epsilon);
}

BoundaryCutoff::ValueGrad BoundaryCutoff::value_and_gradient(Vec2 x) const {
  const auto d = side_distances(x);
  int arg = 0;
  for (int k = 1; k < 4; ++k) {
    if (d[k] < d[arg]) arg = k;  // strict: earlier side wins ties
  }
  const double t = d[arg] / epsilon;
  ValueGrad vg;
  vg.value = cutoff_profile(t);
  const double dpsi = cutoff_profile_derivative(t);
  vg.grad = (dpsi / epsilon) * kSideGradients[arg];
  return vg;
}

namespace {

// 8-point Gauss-Legendre on [-1,1]; exact through degree 15, enough for the
// degree-7 cut-off profile integrands.
const double kGlNodes[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
const double kGlWeights[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss(double a, double b, F&& f) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (int q = 0; q < 8; ++q) {
    s += kGlWeights[q] * f(mid + half * kGlNodes[q]);
  }
  return half * s;
}

// Length of the level set {dist(x, dOmega) = t} in the unit square.
double level_perimeter(double t) { return 4.0 - 8.0 * t; }

}  // namespace

double BoundaryCutoff::l2_ratio() const {
  const double eps = epsilon;
  const double tmax = std::min(2.0 * eps, 0.5);
  double integral = 0.0;
  // profile == 0 up to t = eps, so (1 - psi)^2 == 1 there
  const double t1 = std::min(eps, 0.5);
  integral += 4.0 * t1 - 4.0 * t1 * t1;
  if (tmax > t1) {
    integral += gauss(t1, tmax, [&](double t) {
      const double w = 1.0 - cutoff_profile(t / eps);
      return w * w * level_perimeter(t);
    });
  }
  return std::sqrt(integral / eps);
}

double BoundaryCutoff::grad_l2_ratio() const {
  const double eps = epsilon;
  const double tmax = std::min(2.0 * eps, 0.5);
  double integral = 0.0;
  if (tmax > eps) {
    integral += gauss(eps, tmax, [&](double t) {
      const double g = cutoff_profile_derivative(t / eps) / eps;
      return g * g * level_perimeter(t);
    });
  }
  return epsilon * std::sqrt(integral / eps);
}

}  // namespace homog
