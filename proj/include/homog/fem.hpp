#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "homog/errors.hpp"
#include "homog/mesh.hpp"

namespace homog {

using Coeff = std::function<double(Vec2)>;

struct TriQuadPoint {
  double b0, b1, b2, w;  // barycentric point, weight (weights sum to 1)
};
/// Interior rules exact to the given polynomial degree (1, 2 or 4).
/// All points are strictly inside the reference triangle, so piecewise
/// coefficients with jumps along mesh edges are never sampled on the jump.
const std::vector<TriQuadPoint>& triangle_rule(int degree);

struct EdgeQuadPoint {
  double t, w;  // parameter on [0, 1], weight (weights sum to 1)
};
const std::vector<EdgeQuadPoint>& edge_rule(int points);

/// P1 degree-of-freedom numbering with optional periodic identification and
/// homogeneous Dirichlet elimination by boundary tag.
class FeSpace {
 public:
  FeSpace(const TriMesh& mesh, const std::vector<EdgeTag>& dirichlet_tags,
          bool use_periodic_pairs);

  const TriMesh& mesh() const { return *mesh_; }
  int ndof() const { return ndof_; }
  /// -1 when the vertex is eliminated by a Dirichlet condition.
  int dof(int vertex) const { return v2d_[vertex]; }

  /// Nodal values on every mesh vertex; eliminated vertices read 0.
  std::vector<double> vertex_values(const Eigen::VectorXd& u) const;
  /// Row-sum (lumped) mass vector over dofs: m_i = integral of basis i.
  Eigen::VectorXd lumped_mass() const;

 private:
  const TriMesh* mesh_;
  std::vector<int> v2d_;
  int ndof_ = 0;
};

using SpMat = Eigen::SparseMatrix<double>;

SpMat assemble_stiffness(const FeSpace& space, const Coeff& d, int degree);
/// Constant-tensor stiffness, d row-major {d11, d12, d21, d22}.
SpMat assemble_stiffness_tensor(const FeSpace& space,
                                const std::array<double, 4>& d);
SpMat assemble_mass(const FeSpace& space, const Coeff& c, int degree);
/// Mass concentrated on the boundary edges carrying `tag`.
SpMat assemble_boundary_mass(const FeSpace& space, EdgeTag tag, const Coeff& c,
                             int edge_points);

Eigen::VectorXd assemble_volume_load(const FeSpace& space, const Coeff& f,
                                     int degree);
Eigen::VectorXd assemble_boundary_load(const FeSpace& space, EdgeTag tag,
                                       const Coeff& g, int edge_points);
/// b_a = integral of d(x) dir . grad(phi_a); column loads of cell problems.
Eigen::VectorXd assemble_gradient_load(const FeSpace& space, const Coeff& d,
                                       Vec2 dir, int degree);
/// Correction load for inhomogeneous Dirichlet data: with g_h the nodal
/// interpolant of g supported on the eliminated vertices, returns
/// b_a = -Σ_T ∫_T d ∇g_h . ∇φ_a. Solve with the corrected load, then read
/// the field back through vertex_values_with_boundary.
Eigen::VectorXd dirichlet_lift_load(const FeSpace& space, const Coeff& d,
                                    const Coeff& g, int degree);
std::vector<double> vertex_values_with_boundary(const FeSpace& space,
                                                const Eigen::VectorXd& u,
                                                const Coeff& g);

struct SolveOptions {
  double rel_tol = 1e-10;
  int max_iter = 50000;
  /// Deflation vector; the solve is restricted to its orthogonal complement
  /// (projected CG), used for pure-Neumann/periodic systems with a zero-mean
  /// constraint. The vector need not be normalised.
  const Eigen::VectorXd* deflate = nullptr;
  /// Initial guess (copied); zero when absent.
  const Eigen::VectorXd* initial = nullptr;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // final relative residual
};

/// Jacobi-preconditioned conjugate gradients for SPD systems (SPD on the
/// deflated complement when `deflate` is set). Throws SolverError when the
/// iteration stalls past max_iter or meets non-positive curvature.
Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b,
                          const SolveOptions& opts = {},
                          SolveStats* stats = nullptr);

/// Norms of P1 fields given by vertex values.
double l2_norm(const TriMesh& mesh, const std::vector<double>& u);
double h1_semi_norm(const TriMesh& mesh, const std::vector<double>& u);
double linf_norm(const std::vector<double>& u);

using ExactFn = std::function<double(Vec2)>;
using ExactGradFn = std::function<Vec2(Vec2)>;
double l2_error(const TriMesh& mesh, const std::vector<double>& u,
                const ExactFn& exact);
double h1_semi_error(const TriMesh& mesh, const std::vector<double>& u,
                     const ExactGradFn& exact_grad);

}  // namespace homog
