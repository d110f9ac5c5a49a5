#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "homog/config.hpp"
#include "homog/homogenize.hpp"
#include "homog/mesh.hpp"

namespace homog {

struct MicroSolution {
  std::vector<std::vector<double>> u;  // per species, fine-mesh vertex values
  int picard_iterations = 0;
};

/// Solves the coupled micro system on the tiled mesh: per species,
/// d^eps-diffusion with the eps-scaled Robin flux on the hole boundaries
/// (a-part in the matrix, b F(u) and volume reactions frozen by Picard),
/// zero Dirichlet on the exterior boundary.
MicroSolution solve_micro(double eps, const ProblemSpec& spec,
                          const TriMesh& fine_mesh, const PicardConfig& picard,
                          const std::vector<std::vector<double>>* initial = nullptr);

/// Elementwise gradient evaluator of a reconstruction candidate:
/// (species, fine triangle, barycentric point) -> gradient.
using ReconGradFn =
    std::function<Vec2(int, int, const std::array<double, 3>&)>;

/// ||grad u_i - grad recon_i||_{L2} per species on the fine mesh.
std::vector<double> corrector_norms(const TriMesh& fine_mesh,
                                    const std::vector<std::vector<double>>& u,
                                    const ReconGradFn& recon_grad);
/// Root sum of squares, the product-space norm over species.
double aggregate_norm(const std::vector<double>& per_species);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(error) against log(eps); errors must be positive.
FitResult fit_rate(const std::vector<double>& eps_list,
                   const std::vector<double>& errors);

struct StudyRow {
  double eps = 0.0;
  double h = 0.0;  // fine-mesh max edge length
  std::vector<double> corrector_Vnorm;  // per species
  std::vector<double> naive_Vnorm;      // per species, no corrector terms
  std::vector<double> l2_err_u0;        // per species
  std::vector<double> linf;             // per species, max |u^eps|
  double aggregate = 0.0;
  double naive_aggregate = 0.0;
  double cutoff_ratio_l2 = 0.0;
  double cutoff_ratio_grad = 0.0;
  int picard_iters = 0;
  double wall_ms = 0.0;
  std::string error;  // non-empty when this eps failed
};

struct StudyReport {
  StudyConfig config;
  std::vector<StudyRow> rows;  // one per eps, in eps_list order
  bool fits_valid = false;     // needs >= 3 successful rows
  FitResult aggregate_fit;
  std::vector<FitResult> species_fit;
  FitResult naive_fit;
  int macro_picard_iterations = 0;
};

/// Shared cell + macro stage, then one pipeline per eps (tile, micro solve,
/// reconstruction, norms), run on at most `threads` workers and merged in
/// eps order. Per-eps failures are recorded in the row; only a shared-stage
/// failure throws.
StudyReport run_study(const StudyConfig& cfg, int threads = 1);

enum class ReportFormat { CSV, JSON, PLOTDATA };

/// Writes report.csv / summary.json / plot_species_<i>.dat into `dir`.
void emit_report(const StudyReport& report, const std::filesystem::path& dir,
                 const std::vector<ReportFormat>& formats);

/// Shortest round-trip decimal text for a double (CSV/PLOTDATA cells).
std::string format_double(double v);

}  // namespace homog
