#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

#include "homog/config.hpp"
#include "homog/fem.hpp"
#include "homog/mesh.hpp"
#include "homog/nonlinear.hpp"

namespace homog {

struct EffectiveQuantities {
  std::array<double, 4> d_hat{};  // row-major 2x2
  double Y1 = 0.0;                // meshed cell area
  double A = 0.0;                 // integral of a over the hole boundary
  double B = 0.0;                 // integral of b over the hole boundary
};

struct SecondOrderResponses {
  std::array<std::vector<double>, 4> theta;  // jk row-major, vertex fields
  std::array<double, 4> theta_mean{};        // recorded solvability means
  std::vector<double> w_R, w_a, w_b;
  double w_R_mean = 0.0, w_a_mean = 0.0, w_b_mean = 0.0;
};

/// Everything the expansion needs from the unit cell, per species.
struct CellSolutions {
  double Y1 = 0.0;
  struct Species {
    std::array<std::vector<double>, 2> chi;
    EffectiveQuantities eff;
    SecondOrderResponses second;
  };
  std::vector<Species> species;
};

/// First-order correctors chi_j: periodic, zero-mean solutions of
/// div_y(d (grad chi_j - e_j)) = 0 on the punctured cell.
std::array<std::vector<double>, 2> solve_first_order_cell(
    const TriMesh& cell_mesh, const Coeff& d, double rel_tol = 1e-10);

EffectiveQuantities effective_quantities(
    const TriMesh& cell_mesh, const Coeff& d, const Coeff& a, const Coeff& b,
    const std::array<std::vector<double>, 2>& chi);

SecondOrderResponses solve_second_order_cell(
    const TriMesh& cell_mesh, const Coeff& d, const Coeff& a, const Coeff& b,
    const std::array<std::vector<double>, 2>& chi, double rel_tol = 1e-10);

/// Runs the three steps above for every species of the problem.
CellSolutions build_cell_solutions(const TriMesh& cell_mesh,
                                   const ProblemSpec& spec);

/// Patchwise linear least-squares recovery of nodal derivatives.
std::array<std::vector<double>, 2> recover_gradient(
    const TriMesh& mesh, const std::vector<double>& u);

struct MacroSolution {
  std::vector<std::vector<double>> u0;                      // per species
  std::vector<std::array<std::vector<double>, 2>> grad;    // recovered
  std::vector<std::array<std::vector<double>, 3>> hess;    // H11, H12, H22
  int picard_iterations = 0;
};

/// Upscaled limit problem on the unperforated macro mesh:
/// div(-d_hat grad u_i) - A_i u_i + B_i F_i(u_i) = |Y1| (R_i(u) + f_i).
MacroSolution solve_macro(const CellSolutions& cells,
                          const ReactionSystem& reactions,
                          const std::vector<SourceSpec>& sources,
                          const TriMesh& macro_mesh, const PicardConfig& picard,
                          double solver_tol = 1e-10);

/// Evaluates the truncated two-scale expansion and its full gradient chain
/// on a tiled fine mesh, using provenance for exact cell-field evaluation.
class ExpansionReconstruction {
 public:
  ExpansionReconstruction(double eps, const TriMesh& fine_mesh,
                          const TriMesh& cell_mesh, const TriMesh& macro_mesh,
                          const CellSolutions& cells, const MacroSolution& macro,
                          const ReactionSystem& reactions,
                          const std::vector<SourceSpec>& sources);

  /// Corrector-candidate value u0 + m (eps u1 + eps^2 u2) for species i at a
  /// point of fine triangle t given by barycentric coordinates.
  double value(int i, int t, const std::array<double, 3>& bary) const;
  Vec2 gradient(int i, int t, const std::array<double, 3>& bary) const;
  /// Macro limit alone, for the naive comparison.
  double macro_value(int i, Vec2 x) const;
  Vec2 macro_gradient(int i, Vec2 x) const;

 private:
  struct MacroPoint;
  MacroPoint macro_at(Vec2 x) const;

  double eps_;
  const TriMesh* fine_;
  const TriMesh* cell_;
  const TriMesh* macro_mesh_;
  const CellSolutions* cells_;
  const MacroSolution* macro_;
  const ReactionSystem* reactions_;
  std::vector<Coeff> source_value_;
  std::vector<std::function<Vec2(Vec2)>> source_grad_;
  BoundaryCutoff cutoff_;
  std::unique_ptr<PointLocator> macro_locator_;
};

void save_cell_solutions(const CellSolutions& cells,
                         const std::filesystem::path& dir);
CellSolutions load_cell_solutions(const std::filesystem::path& dir);

}  // namespace homog
