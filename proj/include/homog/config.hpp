#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "homog/fem.hpp"
#include "homog/geometry.hpp"
#include "homog/nonlinear.hpp"

namespace homog {

/// Oscillating cell coefficient descriptor (a function of y on the unit cell).
struct CoefficientSpec {
  enum class Kind { CONSTANT, SMOOTH, LAYERED };
  Kind kind = Kind::CONSTANT;
  double value = 1.0;  // CONSTANT
  double base = 1.0;   // SMOOTH: base (1 + delta sin 2 pi y1 sin 2 pi y2)
  double delta = 0.0;
  double v_left = 1.0;  // LAYERED in y1 at the split line
  double v_right = 1.0;
  double split = 0.5;
};

Coeff build_coeff(const CoefficientSpec& spec);
double coeff_min(const CoefficientSpec& spec);
double coeff_max(const CoefficientSpec& spec);

/// Macroscopic volume source f_i(x); activates species that would otherwise
/// sit at the zero fixed point of the built-in reaction kinds.
struct SourceSpec {
  enum class Kind { CONSTANT, SINE };
  Kind kind = Kind::SINE;
  double value = 0.0;      // CONSTANT
  double amplitude = 1.0;  // SINE: amplitude sin(pi x1) sin(pi x2)
};

Coeff build_source(const SourceSpec& spec);
std::function<Vec2(Vec2)> build_source_gradient(const SourceSpec& spec);

struct ProblemSpec {
  int N = 2;
  std::vector<CoefficientSpec> d, a, b;  // one per species
  ReactionSystem reactions;
  std::vector<SourceSpec> sources;
  UnitCellGeometry geometry;
  double cell_h = 1.0 / 24.0;
  double macro_h = 0.02;
  double solver_tol = 1e-10;
  int solver_max_iter = 50000;
  PicardConfig picard;
  bool allow_positive_a = false;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct StudyConfig {
  ProblemSpec problem;
  std::vector<double> eps_list = {0.25, 0.125, 0.0625, 0.03125};
  int M = 2;
  int K = 0;

  void validate() const;
};

StudyConfig default_config();
/// Strict parse: unknown keys are rejected with their full key path.
StudyConfig parse_config(const std::filesystem::path& path);
StudyConfig parse_config_text(const std::string& text);
std::string serialize_config(const StudyConfig& cfg);

}  // namespace homog
