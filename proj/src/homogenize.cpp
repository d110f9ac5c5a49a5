#include "homog/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace homog {

namespace {

Vec2 tri_point(const TriMesh& mesh, int t, double b0, double b1, double b2) {
  const auto& tri = mesh.triangles[t];
  const Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]],
             c = mesh.vertices[tri[2]];
  return {b0 * a.x + b1 * b.x + b2 * c.x, b0 * a.y + b1 * b.y + b2 * c.y};
}

std::vector<double> solve_cell_system(const FeSpace& space, const SpMat& A,
                                      const Eigen::VectorXd& m,
                                      const Eigen::VectorXd& b, double tol) {
  SolveOptions opts;
  opts.rel_tol = tol;
  opts.deflate = &m;
  Eigen::VectorXd x = solve_spd(A, b, opts);
  x.array() -= m.dot(x) / m.sum();
  return space.vertex_values(x);
}

}  // namespace

std::array<std::vector<double>, 2> solve_first_order_cell(
    const TriMesh& cell_mesh, const Coeff& d, double rel_tol) {
  FeSpace space(cell_mesh, {}, true);
  const SpMat A = assemble_stiffness(space, d, 2);
  const Eigen::VectorXd m = space.lumped_mass();
  std::array<std::vector<double>, 2> chi;
  for (int j = 0; j < 2; ++j) {
    const Vec2 dir = j == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const Eigen::VectorXd b = assemble_gradient_load(space, d, dir, 2);
    chi[j] = solve_cell_system(space, A, m, b, rel_tol);
  }
  return chi;
}

EffectiveQuantities effective_quantities(
    const TriMesh& cell_mesh, const Coeff& d, const Coeff& a, const Coeff& b,
    const std::array<std::vector<double>, 2>& chi) {
  EffectiveQuantities out;
  out.Y1 = cell_mesh.total_area();
  const auto& rule = triangle_rule(2);
  for (int t = 0; t < cell_mesh.triangle_count(); ++t) {
    const double area = cell_mesh.triangle_area(t);
    const auto grads = cell_mesh.basis_gradients(t);
    const auto& tri = cell_mesh.triangles[t];
    double dbar = 0.0;
    for (const auto& q : rule) {
      dbar += q.w * d(tri_point(cell_mesh, t, q.b0, q.b1, q.b2));
    }
    for (int k = 0; k < 2; ++k) {
      Vec2 gchi{0.0, 0.0};
      for (int i = 0; i < 3; ++i) gchi = gchi + chi[k][tri[i]] * grads[i];
      out.d_hat[0 * 2 + k] += dbar * area * ((k == 0 ? 1.0 : 0.0) - gchi.x);
      out.d_hat[1 * 2 + k] += dbar * area * ((k == 1 ? 1.0 : 0.0) - gchi.y);
    }
  }
  const auto& erule = edge_rule(3);
  for (const auto& e : cell_mesh.boundary_edges) {
    if (e.tag != EdgeTag::HOLE) continue;
    const Vec2 pa = cell_mesh.vertices[e.a], pb = cell_mesh.vertices[e.b];
    const double len = norm(pb - pa);
    for (const auto& q : erule) {
      const Vec2 x = pa + q.t * (pb - pa);
      out.A += q.w * len * a(x);
      out.B += q.w * len * b(x);
    }
  }
  return out;
}

SecondOrderResponses solve_second_order_cell(
    const TriMesh& cell_mesh, const Coeff& d, const Coeff& a, const Coeff& b,
    const std::array<std::vector<double>, 2>& chi, double rel_tol) {
  FeSpace space(cell_mesh, {}, true);
  const SpMat A = assemble_stiffness(space, d, 2);
  const Eigen::VectorXd m = space.lumped_mass();
  const double Y1 = m.sum();
  const auto& rule = triangle_rule(2);

  SecondOrderResponses out;

  // Theta_jk carries the second-order geometry response. The raw load is
  //   b_a = int d (delta_jk - d_j chi_k) phi_a + int d chi_k d_j phi_a,
  // the divergence and hole-flux parts merged by parts so the recorded mean
  // reproduces the effective tensor entry exactly.
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd braw = Eigen::VectorXd::Zero(space.ndof());
      for (int t = 0; t < cell_mesh.triangle_count(); ++t) {
        const double area = cell_mesh.triangle_area(t);
        const auto grads = cell_mesh.basis_gradients(t);
        const auto& tri = cell_mesh.triangles[t];
        Vec2 gchi{0.0, 0.0};
        for (int i = 0; i < 3; ++i) gchi = gchi + chi[k][tri[i]] * grads[i];
        const double djchik = j == 0 ? gchi.x : gchi.y;
        for (const auto& q : rule) {
          const double dq = d(tri_point(cell_mesh, t, q.b0, q.b1, q.b2));
          const double chik =
              q.b0 * chi[k][tri[0]] + q.b1 * chi[k][tri[1]] + q.b2 * chi[k][tri[2]];
          const double phi[3] = {q.b0, q.b1, q.b2};
          const double bulk = dq * ((j == k ? 1.0 : 0.0) - djchik);
          for (int i = 0; i < 3; ++i) {
            const int di = space.dof(tri[i]);
            if (di < 0) continue;
            const double gj = j == 0 ? grads[i].x : grads[i].y;
            braw[di] += q.w * area * (bulk * phi[i] + dq * chik * gj);
          }
        }
      }
      const double mean = braw.sum() / Y1;
      out.theta_mean[j * 2 + k] = mean;
      const Eigen::VectorXd bcomp = braw - mean * m;
      out.theta[j * 2 + k] = solve_cell_system(space, A, m, bcomp, rel_tol);
    }
  }

  // w_R: unit volume load; its compatible part vanishes identically.
  {
    const Eigen::VectorXd braw =
        assemble_volume_load(space, [](Vec2) { return 1.0; }, 2);
    out.w_R_mean = braw.sum() / Y1;
    const Eigen::VectorXd bcomp = braw - out.w_R_mean * m;
    out.w_R = solve_cell_system(space, A, m, bcomp, rel_tol);
  }
  // w_a, w_b: pure hole-flux responses.
  {
    const Eigen::VectorXd braw = assemble_boundary_load(space, EdgeTag::HOLE, a, 3);
    out.w_a_mean = braw.sum() / Y1;
    const Eigen::VectorXd bcomp = braw - out.w_a_mean * m;
    out.w_a = solve_cell_system(space, A, m, bcomp, rel_tol);
  }
  {
    const Eigen::VectorXd braw = assemble_boundary_load(
        space, EdgeTag::HOLE, [&b](Vec2 y) { return -b(y); }, 3);
    out.w_b_mean = braw.sum() / Y1;
    const Eigen::VectorXd bcomp = braw - out.w_b_mean * m;
    out.w_b = solve_cell_system(space, A, m, bcomp, rel_tol);
  }
  return out;
}

CellSolutions build_cell_solutions(const TriMesh& cell_mesh,
                                   const ProblemSpec& spec) {
  CellSolutions cells;
  cells.species.resize(spec.N);
  for (int i = 0; i < spec.N; ++i) {
    const Coeff d = build_coeff(spec.d[i]);
    const Coeff a = build_coeff(spec.a[i]);
    const Coeff b = build_coeff(spec.b[i]);
    auto& sp = cells.species[i];
    sp.chi = solve_first_order_cell(cell_mesh, d, spec.solver_tol);
    sp.eff = effective_quantities(cell_mesh, d, a, b, sp.chi);
    sp.second =
        solve_second_order_cell(cell_mesh, d, a, b, sp.chi, spec.solver_tol);
  }
  cells.Y1 = cells.species.empty() ? cell_mesh.total_area()
                                   : cells.species[0].eff.Y1;
  return cells;
}

// ---------------------------------------------------------------------------
// derivative recovery
// ---------------------------------------------------------------------------

namespace {

struct PatchFit {
  // linear model g ~ c0 + c1 (x - xv) + c2 (y - yv) fitted at triangle
  // centroids; c0 is the recovered nodal value
  static bool solve3(double M[3][3], double r[3][2], double out[2][3]) {
    int perm[3] = {0, 1, 2};
    double scale = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(M[i][j]));
    }
    if (scale == 0.0) return false;
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int row = col + 1; row < 3; ++row) {
        if (std::abs(M[perm[row]][col]) > std::abs(M[perm[piv]][col])) piv = row;
      }
      std::swap(perm[col], perm[piv]);
      const double p = M[perm[col]][col];
      if (std::abs(p) < 1e-12 * scale) return false;
      for (int row = col + 1; row < 3; ++row) {
        const double f = M[perm[row]][col] / p;
        for (int j = col; j < 3; ++j) M[perm[row]][j] -= f * M[perm[col]][j];
        r[perm[row]][0] -= f * r[perm[col]][0];
        r[perm[row]][1] -= f * r[perm[col]][1];
      }
    }
    for (int comp = 0; comp < 2; ++comp) {
      for (int col = 2; col >= 0; --col) {
        double s = r[perm[col]][comp];
        for (int j = col + 1; j < 3; ++j) s -= M[perm[col]][j] * out[comp][j];
        out[comp][col] = s / M[perm[col]][col];
      }
    }
    return true;
  }
};

}  // namespace

std::array<std::vector<double>, 2> recover_gradient(const TriMesh& mesh,
                                                    const std::vector<double>& u) {
  const int V = mesh.vertex_count();
  const int T = mesh.triangle_count();
  if (static_cast<int>(u.size()) != V) {
    throw AssemblyError("recover_gradient: field size mismatch");
  }
  std::vector<Vec2> eg(T), ec(T);
  for (int t = 0; t < T; ++t) {
    const auto grads = mesh.basis_gradients(t);
    const auto& tri = mesh.triangles[t];
    eg[t] = u[tri[0]] * grads[0] + u[tri[1]] * grads[1] + u[tri[2]] * grads[2];
    ec[t] = mesh.centroid(t);
  }
  std::vector<std::vector<int>> fan(V);
  for (int t = 0; t < T; ++t) {
    for (int v : mesh.triangles[t]) fan[v].push_back(t);
  }

  std::array<std::vector<double>, 2> out;
  out[0].resize(V);
  out[1].resize(V);

  auto fit_patch = [&](int v, const std::vector<int>& patch, double res[2]) {
    const Vec2 pv = mesh.vertices[v];
    double M[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double r[3][2] = {{0, 0}, {0, 0}, {0, 0}};
    for (int t : patch) {
      const double dx = ec[t].x - pv.x, dy = ec[t].y - pv.y;
      M[0][0] += 1.0;
      M[0][1] += dx;
      M[0][2] += dy;
      M[1][1] += dx * dx;
      M[1][2] += dx * dy;
      M[2][2] += dy * dy;
      r[0][0] += eg[t].x;
      r[1][0] += eg[t].x * dx;
      r[2][0] += eg[t].x * dy;
      r[0][1] += eg[t].y;
      r[1][1] += eg[t].y * dx;
      r[2][1] += eg[t].y * dy;
    }
    M[1][0] = M[0][1];
    M[2][0] = M[0][2];
    M[2][1] = M[1][2];
    double c[2][3];
    if (patch.size() >= 3 && PatchFit::solve3(M, r, c)) {
      res[0] = c[0][0];
      res[1] = c[1][0];
      return true;
    }
    return false;
  };

  std::vector<int> extended;
  for (int v = 0; v < V; ++v) {
    double res[2];
    if (fit_patch(v, fan[v], res)) {
      out[0][v] = res[0];
      out[1][v] = res[1];
      continue;
    }
    extended.clear();
    for (int t : fan[v]) {
      for (int w : mesh.triangles[t]) {
        extended.insert(extended.end(), fan[w].begin(), fan[w].end());
      }
    }
    std::sort(extended.begin(), extended.end());
    extended.erase(std::unique(extended.begin(), extended.end()), extended.end());
    if (fit_patch(v, extended, res)) {
      out[0][v] = res[0];
      out[1][v] = res[1];
      continue;
    }
    Vec2 avg{0.0, 0.0};
    for (int t : extended) avg = avg + eg[t];
    out[0][v] = avg.x / extended.size();
    out[1][v] = avg.y / extended.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// macroscopic limit problem
// ---------------------------------------------------------------------------

MacroSolution solve_macro(const CellSolutions& cells,
                          const ReactionSystem& reactions,
                          const std::vector<SourceSpec>& sources,
                          const TriMesh& macro_mesh, const PicardConfig& picard,
                          double solver_tol) {
  const int N = static_cast<int>(cells.species.size());
  if (N != reactions.N || static_cast<int>(sources.size()) != N) {
    throw AssemblyError("solve_macro: species count mismatch");
  }
  FeSpace space(macro_mesh, {EdgeTag::OUTER_CELL, EdgeTag::EXTERIOR}, false);
  const int n = space.ndof();
  const SpMat M = assemble_mass(space, [](Vec2) { return 1.0; }, 2);
  const Eigen::VectorXd lump = space.lumped_mass();
  const double Y1 = cells.Y1;

  std::vector<SpMat> K(N);
  std::vector<Eigen::VectorXd> fvec(N);
  for (int i = 0; i < N; ++i) {
    K[i] = assemble_stiffness_tensor(space, cells.species[i].eff.d_hat);
    if (cells.species[i].eff.A != 0.0) {
      K[i] = (K[i] - cells.species[i].eff.A * M).pruned();
    }
    fvec[i] = assemble_volume_load(space, build_source(sources[i]), 2);
  }

  auto reactions_fn = [&](const State& u) {
    State loads(N);
    for (int i = 0; i < N; ++i) {
      Eigen::VectorXd r(n), F(n);
      std::vector<double> point(N);
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < N; ++j) point[j] = u[j][k];
        r[k] = reactions.eval_R(i, point);
        F[k] = reactions.eval_F(i, u[i][k]);
      }
      loads[i] = Y1 * (M * r + fvec[i]) - cells.species[i].eff.B * (M * F);
    }
    return loads;
  };

  auto warm = std::make_shared<State>(N, Eigen::VectorXd::Zero(n));
  auto apply_fn = [&, warm](const State& loads) {
    State sol(N);
    for (int i = 0; i < N; ++i) {
      SolveOptions opts;
      opts.rel_tol = solver_tol;
      opts.initial = &(*warm)[i];
      sol[i] = solve_spd(K[i], loads[i], opts);
      (*warm)[i] = sol[i];
    }
    return sol;
  };

  auto norm_fn = [&](const State& u) {
    double s = 0.0;
    for (const auto& v : u) s += v.dot(lump.asDiagonal() * v);
    return std::sqrt(s);
  };

  const State u0(N, Eigen::VectorXd::Zero(n));
  PicardResult res = picard_solve(apply_fn, reactions_fn, u0, picard, norm_fn);

  MacroSolution out;
  out.picard_iterations = res.iterations;
  out.u0.resize(N);
  out.grad.resize(N);
  out.hess.resize(N);
  for (int i = 0; i < N; ++i) {
    out.u0[i] = space.vertex_values(res.solution[i]);
    out.grad[i] = recover_gradient(macro_mesh, out.u0[i]);
    const auto g1 = recover_gradient(macro_mesh, out.grad[i][0]);
    const auto g2 = recover_gradient(macro_mesh, out.grad[i][1]);
    out.hess[i][0] = g1[0];
    out.hess[i][2] = g2[1];
    out.hess[i][1].resize(out.u0[i].size());
    for (size_t k = 0; k < out.u0[i].size(); ++k) {
      out.hess[i][1][k] = 0.5 * (g1[1][k] + g2[0][k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// expansion reconstruction
// ---------------------------------------------------------------------------

struct ExpansionReconstruction::MacroPoint {
  int tri = -1;
  std::array<double, 3> b{};
};

ExpansionReconstruction::ExpansionReconstruction(
    double eps, const TriMesh& fine_mesh, const TriMesh& cell_mesh,
    const TriMesh& macro_mesh, const CellSolutions& cells,
    const MacroSolution& macro, const ReactionSystem& reactions,
    const std::vector<SourceSpec>& sources)
    : eps_(eps),
      fine_(&fine_mesh),
      cell_(&cell_mesh),
      macro_mesh_(&macro_mesh),
      cells_(&cells),
      macro_(&macro),
      reactions_(&reactions),
      cutoff_(eps),
      macro_locator_(std::make_unique<PointLocator>(macro_mesh)) {
  if (fine_mesh.provenance.size() != fine_mesh.triangles.size() ||
      fine_mesh.provenance.empty()) {
    throw AssemblyError("reconstruction requires a tiled mesh with provenance");
  }
  if (std::abs(fine_mesh.epsilon - eps) > 1e-12) {
    throw MeshError("fine mesh was tiled at a different eps");
  }
  const int N = static_cast<int>(cells.species.size());
  if (static_cast<int>(macro.u0.size()) != N || reactions.N != N ||
      static_cast<int>(sources.size()) != N) {
    throw AssemblyError("reconstruction: species count mismatch");
  }
  for (const auto& s : sources) {
    source_value_.push_back(build_source(s));
    source_grad_.push_back(build_source_gradient(s));
  }
}

ExpansionReconstruction::MacroPoint ExpansionReconstruction::macro_at(Vec2 x) const {
  const Vec2 clamped{std::clamp(x.x, 0.0, 1.0), std::clamp(x.y, 0.0, 1.0)};
  const LocateResult loc = macro_locator_->locate(clamped);
  return {loc.triangle, loc.bary};
}

namespace {

double interp(const TriMesh& mesh, const std::vector<double>& f, int t,
              const std::array<double, 3>& b) {
  const auto& tri = mesh.triangles[t];
  return b[0] * f[tri[0]] + b[1] * f[tri[1]] + b[2] * f[tri[2]];
}

Vec2 field_grad(const TriMesh& mesh, const std::vector<double>& f, int t) {
  const auto grads = mesh.basis_gradients(t);
  const auto& tri = mesh.triangles[t];
  return f[tri[0]] * grads[0] + f[tri[1]] * grads[1] + f[tri[2]] * grads[2];
}

}  // namespace

double ExpansionReconstruction::value(int i, int t,
                                      const std::array<double, 3>& bary) const {
  const Vec2 x = tri_point(*fine_, t, bary[0], bary[1], bary[2]);
  const auto& prov = fine_->provenance[t];
  const int ct = prov.cell_triangle;
  const MacroPoint mp = macro_at(x);
  const auto& sp = cells_->species[i];

  const double u0 = interp(*macro_mesh_, macro_->u0[i], mp.tri, mp.b);
  const Vec2 g{interp(*macro_mesh_, macro_->grad[i][0], mp.tri, mp.b),
               interp(*macro_mesh_, macro_->grad[i][1], mp.tri, mp.b)};
  const double H11 = interp(*macro_mesh_, macro_->hess[i][0], mp.tri, mp.b);
  const double H12 = interp(*macro_mesh_, macro_->hess[i][1], mp.tri, mp.b);
  const double H22 = interp(*macro_mesh_, macro_->hess[i][2], mp.tri, mp.b);

  std::vector<double> uall(cells_->species.size());
  for (size_t j = 0; j < uall.size(); ++j) {
    uall[j] = interp(*macro_mesh_, macro_->u0[j], mp.tri, mp.b);
  }
  const double S = reactions_->eval_R(i, uall) + source_value_[i](x);

  const double chi1 = interp(*cell_, sp.chi[0], ct, bary);
  const double chi2 = interp(*cell_, sp.chi[1], ct, bary);
  const double u1 = -(chi1 * g.x + chi2 * g.y);

  const double th11 = interp(*cell_, sp.second.theta[0], ct, bary);
  const double th12 = interp(*cell_, sp.second.theta[1], ct, bary);
  const double th21 = interp(*cell_, sp.second.theta[2], ct, bary);
  const double th22 = interp(*cell_, sp.second.theta[3], ct, bary);
  const double wR = interp(*cell_, sp.second.w_R, ct, bary);
  const double wa = interp(*cell_, sp.second.w_a, ct, bary);
  const double wb = interp(*cell_, sp.second.w_b, ct, bary);
  const double u2 = th11 * H11 + (th12 + th21) * H12 + th22 * H22 + wR * S +
                    wa * u0 + wb * reactions_->eval_F(i, u0);

  const double m = cutoff_.value(x);
  return u0 + m * (eps_ * u1 + eps_ * eps_ * u2);
}

Vec2 ExpansionReconstruction::gradient(int i, int t,
                                       const std::array<double, 3>& bary) const {
  const Vec2 x = tri_point(*fine_, t, bary[0], bary[1], bary[2]);
  const auto& prov = fine_->provenance[t];
  const int ct = prov.cell_triangle;
  const MacroPoint mp = macro_at(x);
  const auto& sp = cells_->species[i];
  const int N = static_cast<int>(cells_->species.size());

  const double u0 = interp(*macro_mesh_, macro_->u0[i], mp.tri, mp.b);
  const Vec2 g{interp(*macro_mesh_, macro_->grad[i][0], mp.tri, mp.b),
               interp(*macro_mesh_, macro_->grad[i][1], mp.tri, mp.b)};
  const double H11 = interp(*macro_mesh_, macro_->hess[i][0], mp.tri, mp.b);
  const double H12 = interp(*macro_mesh_, macro_->hess[i][1], mp.tri, mp.b);
  const double H22 = interp(*macro_mesh_, macro_->hess[i][2], mp.tri, mp.b);

  std::vector<double> uall(N);
  for (int j = 0; j < N; ++j) {
    uall[j] = interp(*macro_mesh_, macro_->u0[j], mp.tri, mp.b);
  }
  const double S = reactions_->eval_R(i, uall) + source_value_[i](x);
  Vec2 gradS = source_grad_[i](x);
  for (int j = 0; j < N; ++j) {
    const double dRj = reactions_->volume_jacobian(i, j, uall);
    if (dRj == 0.0) continue;
    const Vec2 gj{interp(*macro_mesh_, macro_->grad[j][0], mp.tri, mp.b),
                  interp(*macro_mesh_, macro_->grad[j][1], mp.tri, mp.b)};
    gradS = gradS + dRj * gj;
  }

  const double chi1 = interp(*cell_, sp.chi[0], ct, bary);
  const double chi2 = interp(*cell_, sp.chi[1], ct, bary);
  const Vec2 gchi1 = field_grad(*cell_, sp.chi[0], ct);
  const Vec2 gchi2 = field_grad(*cell_, sp.chi[1], ct);

  const double u1 = -(chi1 * g.x + chi2 * g.y);
  const Vec2 gy_u1 = -1.0 * (g.x * gchi1 + g.y * gchi2);
  const Vec2 gx_u1{-(chi1 * H11 + chi2 * H12), -(chi1 * H12 + chi2 * H22)};

  const double th11 = interp(*cell_, sp.second.theta[0], ct, bary);
  const double th12 = interp(*cell_, sp.second.theta[1], ct, bary);
  const double th21 = interp(*cell_, sp.second.theta[2], ct, bary);
  const double th22 = interp(*cell_, sp.second.theta[3], ct, bary);
  const double wR = interp(*cell_, sp.second.w_R, ct, bary);
  const double wa = interp(*cell_, sp.second.w_a, ct, bary);
  const double wb = interp(*cell_, sp.second.w_b, ct, bary);
  const double Fu0 = reactions_->eval_F(i, u0);
  const double u2 = th11 * H11 + (th12 + th21) * H12 + th22 * H22 + wR * S +
                    wa * u0 + wb * Fu0;

  const Vec2 gy_u2 = H11 * field_grad(*cell_, sp.second.theta[0], ct) +
                     H12 * field_grad(*cell_, sp.second.theta[1], ct) +
                     H12 * field_grad(*cell_, sp.second.theta[2], ct) +
                     H22 * field_grad(*cell_, sp.second.theta[3], ct) +
                     S * field_grad(*cell_, sp.second.w_R, ct) +
                     u0 * field_grad(*cell_, sp.second.w_a, ct) +
                     Fu0 * field_grad(*cell_, sp.second.w_b, ct);

  const Vec2 gH11 = field_grad(*macro_mesh_, macro_->hess[i][0], mp.tri);
  const Vec2 gH12 = field_grad(*macro_mesh_, macro_->hess[i][1], mp.tri);
  const Vec2 gH22 = field_grad(*macro_mesh_, macro_->hess[i][2], mp.tri);
  const Vec2 gx_u2 = th11 * gH11 + (th12 + th21) * gH12 + th22 * gH22 +
                     wR * gradS + wa * g +
                     (wb * reactions_->surface_derivative(i, u0)) * g;

  const auto mg = cutoff_.value_and_gradient(x);
  const double e1 = eps_, e2 = eps_ * eps_;
  return g + (e1 * u1 + e2 * u2) * mg.grad +
         mg.value * (gy_u1 + e1 * (gx_u1 + gy_u2) + e2 * gx_u2);
}

double ExpansionReconstruction::macro_value(int i, Vec2 x) const {
  const MacroPoint mp = macro_at(x);
  return interp(*macro_mesh_, macro_->u0[i], mp.tri, mp.b);
}

Vec2 ExpansionReconstruction::macro_gradient(int i, Vec2 x) const {
  const MacroPoint mp = macro_at(x);
  return {interp(*macro_mesh_, macro_->grad[i][0], mp.tri, mp.b),
          interp(*macro_mesh_, macro_->grad[i][1], mp.tri, mp.b)};
}

// ---------------------------------------------------------------------------
// cell solution serialization
// ---------------------------------------------------------------------------

namespace {

void write_field(const std::filesystem::path& path,
                 const std::vector<double>& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.precision(17);
  for (double v : f) os << v << "\n";
  if (!os) throw Error("write failed: " + path.string());
}

std::vector<double> read_field(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::vector<double> f;
  double v;
  while (is >> v) f.push_back(v);
  return f;
}

}  // namespace

void save_cell_solutions(const CellSolutions& cells,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["Y1"] = cells.Y1;
  for (size_t i = 0; i < cells.species.size(); ++i) {
    const auto& sp = cells.species[i];
    const std::string tag = "species_" + std::to_string(i + 1);
    nlohmann::json js;
    js["d_hat"] = sp.eff.d_hat;
    js["A"] = sp.eff.A;
    js["B"] = sp.eff.B;
    js["theta_mean"] = sp.second.theta_mean;
    js["w_R_mean"] = sp.second.w_R_mean;
    js["w_a_mean"] = sp.second.w_a_mean;
    js["w_b_mean"] = sp.second.w_b_mean;
    manifest["species"].push_back(js);
    for (int j = 0; j < 2; ++j) {
      write_field(dir / (tag + "_chi_" + std::to_string(j + 1) + ".txt"),
                  sp.chi[j]);
    }
    for (int jk = 0; jk < 4; ++jk) {
      write_field(dir / (tag + "_theta_" + std::to_string(jk / 2 + 1) +
                         std::to_string(jk % 2 + 1) + ".txt"),
                  sp.second.theta[jk]);
    }
    write_field(dir / (tag + "_w_R.txt"), sp.second.w_R);
    write_field(dir / (tag + "_w_a.txt"), sp.second.w_a);
    write_field(dir / (tag + "_w_b.txt"), sp.second.w_b);
  }
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(2) << "\n";
  if (!os) throw Error("write failed: " + (dir / "manifest.json").string());
}

CellSolutions load_cell_solutions(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw Error("cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  is >> manifest;
  CellSolutions cells;
  cells.Y1 = manifest.at("Y1").get<double>();
  const auto& species = manifest.at("species");
  for (size_t i = 0; i < species.size(); ++i) {
    const auto& js = species[i];
    const std::string tag = "species_" + std::to_string(i + 1);
    CellSolutions::Species sp;
    for (int k = 0; k < 4; ++k) {
      sp.eff.d_hat[k] = js.at("d_hat")[k].get<double>();
      sp.second.theta_mean[k] = js.at("theta_mean")[k].get<double>();
    }
    sp.eff.Y1 = cells.Y1;
    sp.eff.A = js.at("A").get<double>();
    sp.eff.B = js.at("B").get<double>();
    sp.second.w_R_mean = js.at("w_R_mean").get<double>();
    sp.second.w_a_mean = js.at("w_a_mean").get<double>();
    sp.second.w_b_mean = js.at("w_b_mean").get<double>();
    for (int j = 0; j < 2; ++j) {
      sp.chi[j] = read_field(dir / (tag + "_chi_" + std::to_string(j + 1) + ".txt"));
    }
    for (int jk = 0; jk < 4; ++jk) {
      sp.second.theta[jk] = read_field(dir / (tag + "_theta_" +
                                              std::to_string(jk / 2 + 1) +
                                              std::to_string(jk % 2 + 1) + ".txt"));
    }
    sp.second.w_R = read_field(dir / (tag + "_w_R.txt"));
    sp.second.w_a = read_field(dir / (tag + "_w_a.txt"));
    sp.second.w_b = read_field(dir / (tag + "_w_b.txt"));
    cells.species.push_back(std::move(sp));
  }
  return cells;
}

}  // namespace homog
