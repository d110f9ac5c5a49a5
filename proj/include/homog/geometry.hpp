#pragma once

#include <cmath>

#include "homog/errors.hpp"

namespace homog {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Unit periodicity cell Y = (0,1)^2 with one circular hole (radius 0 = no hole).
struct UnitCellGeometry {
  Vec2 hole_center{0.5, 0.5};
  double hole_radius = 0.0;

  bool has_hole() const { return hole_radius > 0.0; }

  /// Negative inside the hole, zero on the circle, positive in the material.
  double signed_distance(Vec2 y) const {
    return norm(y - hole_center) - hole_radius;
  }

  /// Exact material area |Y_1| = 1 - pi r^2.
  double material_area() const {
    return 1.0 - M_PI * hole_radius * hole_radius;
  }

  void validate() const;
};

struct CellCoord {
  long ix = 0;
  long iy = 0;
};

struct WrapResult {
  CellCoord cell;
  Vec2 y;  // local coordinate in [0,1)^2 (up to rounding)
};

/// Splits a macroscopic point into cell index and local coordinate:
/// x = eps * (cell + y), y = x/eps - floor(x/eps).
WrapResult wrap_to_cell(Vec2 x, double eps);

/// Macroscopic domain Omega = (0,1)^2 perforated by eps-scaled copies of the cell.
struct PerforatedDomainGeometry {
  UnitCellGeometry cell;
  double epsilon = 1.0;
  int cells_per_side = 1;

  static PerforatedDomainGeometry make(const UnitCellGeometry& cell, double eps);
};

/// Number of cells per side for a valid eps; throws ConfigError otherwise.
int cells_per_side_for(double eps);

/// Smooth boundary cut-off m_eps: 0 on the strip {dist(x, dOmega) <= eps},
/// 1 on {dist >= 2 eps}, cubic smoothstep between; |d/dt psi| <= 3/2.
struct BoundaryCutoff {
  double epsilon = 0.0;

  explicit BoundaryCutoff(double eps);

  double value(Vec2 x) const;

  struct ValueGrad {
    double value;
    Vec2 grad;
  };
  /// Gradient off the strip edges; ties between square sides broken by the
  /// nearest-edge rule in the fixed order (x1, 1-x1, x2, 1-x2).
  ValueGrad value_and_gradient(Vec2 x) const;

  /// ||1 - m_eps||_{L2(Omega)} / eps^{1/2}, via the coarea profile integral.
  double l2_ratio() const;
  /// eps ||grad m_eps||_{L2(Omega)} / eps^{1/2}, same route.
  double grad_l2_ratio() const;
};

/// Cut-off profile psi and its derivative as functions of t = dist/eps.
double cutoff_profile(double t);
double cutoff_profile_derivative(double t);

}  // namespace homog
