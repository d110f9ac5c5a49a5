#include "homog/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace homog {

const std::vector<TriQuadPoint>& triangle_rule(int degree) {
  static const std::vector<TriQuadPoint> deg1 = {
      {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0}};
  static const std::vector<TriQuadPoint> deg2 = {
      {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0},
      {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0},
      {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0}};
  static const std::vector<TriQuadPoint> deg4 = [] {
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    std::vector<TriQuadPoint> r;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      r.push_back({1.0 - 2.0 * a, a, a, w});
      r.push_back({a, 1.0 - 2.0 * a, a, w});
      r.push_back({a, a, 1.0 - 2.0 * a, w});
    }
    return r;
  }();
  switch (degree) {
    case 1: return deg1;
    case 2: return deg2;
    case 4: return deg4;
  }
  throw AssemblyError("unsupported triangle quadrature degree");
}

const std::vector<EdgeQuadPoint>& edge_rule(int points) {
  static const std::vector<EdgeQuadPoint> g2 = {
      {0.5 - 0.5 / std::sqrt(3.0), 0.5}, {0.5 + 0.5 / std::sqrt(3.0), 0.5}};
  static const std::vector<EdgeQuadPoint> g3 = {
      {0.5 - 0.5 * std::sqrt(0.6), 5.0 / 18.0},
      {0.5, 8.0 / 18.0},
      {0.5 + 0.5 * std::sqrt(0.6), 5.0 / 18.0}};
  switch (points) {
    case 2: return g2;
    case 3: return g3;
  }
  throw AssemblyError("unsupported edge quadrature point count");
}

// ---------------------------------------------------------------------------

FeSpace::FeSpace(const TriMesh& mesh, const std::vector<EdgeTag>& dirichlet_tags,
                 bool use_periodic_pairs)
    : mesh_(&mesh) {
  const int V = mesh.vertex_count();
  std::vector<int> parent(V);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  if (use_periodic_pairs) {
    for (const auto& p : mesh.periodic_pairs) {
      parent[find(p.slave)] = find(p.master);
    }
  }
  std::vector<char> fixed(V, 0);
  for (const auto& e : mesh.boundary_edges) {
    if (std::find(dirichlet_tags.begin(), dirichlet_tags.end(), e.tag) !=
        dirichlet_tags.end()) {
      fixed[find(e.a)] = 1;
      fixed[find(e.b)] = 1;
    }
  }
  v2d_.assign(V, -1);
  for (int v = 0; v < V; ++v) {
    if (find(v) == v && !fixed[v]) v2d_[v] = ndof_++;
  }
  for (int v = 0; v < V; ++v) {
    const int r = find(v);
    v2d_[v] = fixed[r] ? -1 : v2d_[r];
  }
  if (ndof_ == 0) throw AssemblyError("space has no free degrees of freedom");
}

std::vector<double> FeSpace::vertex_values(const Eigen::VectorXd& u) const {
  std::vector<double> out(v2d_.size());
  for (size_t v = 0; v < v2d_.size(); ++v) {
    out[v] = v2d_[v] < 0 ? 0.0 : u[v2d_[v]];
  }
  return out;
}

Eigen::VectorXd FeSpace::lumped_mass() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(ndof_);
  for (int t = 0; t < mesh_->triangle_count(); ++t) {
    const double third = mesh_->triangle_area(t) / 3.0;
    for (int v : mesh_->triangles[t]) {
      if (v2d_[v] >= 0) m[v2d_[v]] += third;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat from_triplets(int n, std::vector<Triplet>& trips) {
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

Vec2 quad_point(const TriMesh& mesh, int t, const TriQuadPoint& q) {
  const auto& tri = mesh.triangles[t];
  const Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]],
             c = mesh.vertices[tri[2]];
  return {q.b0 * a.x + q.b1 * b.x + q.b2 * c.x,
          q.b0 * a.y + q.b1 * b.y + q.b2 * c.y};
}

}  // namespace

SpMat assemble_stiffness(const FeSpace& space, const Coeff& d, int degree) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = triangle_rule(degree);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.triangle_count()) * 9);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto grads = mesh.basis_gradients(t);
    double cbar = 0.0;
    for (const auto& q : rule) {
      const double dq = d(quad_point(mesh, t, q));
      if (!(dq > 0.0)) {
        throw AssemblyError("non-positive diffusion sample in stiffness assembly");
      }
      cbar += q.w * dq;
    }
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int di = space.dof(tri[i]);
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = space.dof(tri[j]);
        if (dj < 0) continue;
        trips.emplace_back(di, dj, cbar * area * dot(grads[i], grads[j]));
      }
    }
  }
  return from_triplets(space.ndof(), trips);
}

SpMat assemble_stiffness_tensor(const FeSpace& space,
                                const std::array<double, 4>& d) {
  const TriMesh& mesh = space.mesh();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.triangle_count()) * 9);
  auto apply = [&](Vec2 g) {
    return Vec2{d[0] * g.x + d[1] * g.y, d[2] * g.x + d[3] * g.y};
  };
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto grads = mesh.basis_gradients(t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int di = space.dof(tri[i]);
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = space.dof(tri[j]);
        if (dj < 0) continue;
        trips.emplace_back(di, dj, area * dot(grads[i], apply(grads[j])));
      }
    }
  }
  return from_triplets(space.ndof(), trips);
}

SpMat assemble_mass(const FeSpace& space, const Coeff& c, int degree) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = triangle_rule(degree);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.triangle_count()) * 9);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    for (const auto& q : rule) {
      const double cq = c(quad_point(mesh, t, q)) * q.w * area;
      const double phi[3] = {q.b0, q.b1, q.b2};
      for (int i = 0; i < 3; ++i) {
        const int di = space.dof(tri[i]);
        if (di < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const int dj = space.dof(tri[j]);
          if (dj < 0) continue;
          trips.emplace_back(di, dj, cq * phi[i] * phi[j]);
        }
      }
    }
  }
  return from_triplets(space.ndof(), trips);
}

SpMat assemble_boundary_mass(const FeSpace& space, EdgeTag tag, const Coeff& c,
                             int edge_points) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = edge_rule(edge_points);
  std::vector<Triplet> trips;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != tag) continue;
    const Vec2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
    const double len = norm(pb - pa);
    const int da = space.dof(e.a), db = space.dof(e.b);
    for (const auto& q : rule) {
      const Vec2 x = pa + q.t * (pb - pa);
      const double cq = c(x) * q.w * len;
      const double phi[2] = {1.0 - q.t, q.t};
      const int dofs[2] = {da, db};
      for (int i = 0; i < 2; ++i) {
        if (dofs[i] < 0) continue;
        for (int j = 0; j < 2; ++j) {
          if (dofs[j] < 0) continue;
          trips.emplace_back(dofs[i], dofs[j], cq * phi[i] * phi[j]);
        }
      }
    }
  }
  return from_triplets(space.ndof(), trips);
}

Eigen::VectorXd assemble_volume_load(const FeSpace& space, const Coeff& f,
                                     int degree) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = triangle_rule(degree);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.ndof());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    for (const auto& q : rule) {
      const double fq = f(quad_point(mesh, t, q)) * q.w * area;
      const double phi[3] = {q.b0, q.b1, q.b2};
      for (int i = 0; i < 3; ++i) {
        const int di = space.dof(tri[i]);
        if (di >= 0) b[di] += fq * phi[i];
      }
    }
  }
  return b;
}

Eigen::VectorXd assemble_boundary_load(const FeSpace& space, EdgeTag tag,
                                       const Coeff& g, int edge_points) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = edge_rule(edge_points);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.ndof());
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != tag) continue;
    const Vec2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
    const double len = norm(pb - pa);
    const int dofs[2] = {space.dof(e.a), space.dof(e.b)};
    for (const auto& q : rule) {
      const double gq = g(pa + q.t * (pb - pa)) * q.w * len;
      const double phi[2] = {1.0 - q.t, q.t};
      for (int i = 0; i < 2; ++i) {
        if (dofs[i] >= 0) b[dofs[i]] += gq * phi[i];
      }
    }
  }
  return b;
}

Eigen::VectorXd assemble_gradient_load(const FeSpace& space, const Coeff& d,
                                       Vec2 dir, int degree) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = triangle_rule(degree);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.ndof());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto grads = mesh.basis_gradients(t);
    double cbar = 0.0;
    for (const auto& q : rule) cbar += q.w * d(quad_point(mesh, t, q));
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int di = space.dof(tri[i]);
      if (di >= 0) b[di] += cbar * area * dot(dir, grads[i]);
    }
  }
  return b;
}

Eigen::VectorXd dirichlet_lift_load(const FeSpace& space, const Coeff& d,
                                    const Coeff& g, int degree) {
  const TriMesh& mesh = space.mesh();
  const auto& rule = triangle_rule(degree);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.ndof());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    bool touches = false;
    for (int v : tri) touches = touches || space.dof(v) < 0;
    if (!touches) continue;
    const double area = mesh.triangle_area(t);
    const auto grads = mesh.basis_gradients(t);
    Vec2 glift{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      if (space.dof(tri[i]) < 0) glift = glift + g(mesh.vertices[tri[i]]) * grads[i];
    }
    double cbar = 0.0;
    for (const auto& q : rule) cbar += q.w * d(quad_point(mesh, t, q));
    for (int i = 0; i < 3; ++i) {
      const int di = space.dof(tri[i]);
      if (di >= 0) b[di] -= cbar * area * dot(glift, grads[i]);
    }
  }
  return b;
}

std::vector<double> vertex_values_with_boundary(const FeSpace& space,
                                                const Eigen::VectorXd& u,
                                                const Coeff& g) {
  std::vector<double> out = space.vertex_values(u);
  const TriMesh& mesh = space.mesh();
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (space.dof(v) < 0) out[v] = g(mesh.vertices[v]);
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b,
                          const SolveOptions& opts, SolveStats* stats) {
  const auto n = A.rows();
  if (A.cols() != n || b.size() != n) {
    throw AssemblyError("solve_spd: dimension mismatch");
  }

  Eigen::VectorXd mn;
  const bool deflated = opts.deflate != nullptr;
  if (deflated) {
    mn = *opts.deflate;
    const double nrm = mn.norm();
    if (nrm == 0.0) throw AssemblyError("solve_spd: zero deflation vector");
    mn /= nrm;
  }
  auto project = [&](Eigen::VectorXd& v) {
    if (deflated) v -= mn * mn.dot(v);
  };

  Eigen::VectorXd invdiag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = A.coeff(i, i);
    if (!(d > 0.0)) {
      throw SolverError("solve_spd: non-positive diagonal entry", 0.0, 0);
    }
    invdiag[i] = 1.0 / d;
  }

  Eigen::VectorXd rhs = b;
  project(rhs);
  const double bnorm = rhs.norm();
  Eigen::VectorXd x;
  if (opts.initial && opts.initial->size() == n) {
    x = *opts.initial;
    project(x);
  } else {
    x = Eigen::VectorXd::Zero(n);
  }
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return Eigen::VectorXd::Zero(n);
  }

  Eigen::VectorXd r = rhs - A * x;
  project(r);
  Eigen::VectorXd z = invdiag.asDiagonal() * r;
  project(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  double rel = r.norm() / bnorm;

  int it = 0;
  for (; it < opts.max_iter && rel > opts.rel_tol; ++it) {
    Eigen::VectorXd Ap = A * p;
    project(Ap);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) {
      throw SolverError("solve_spd: non-positive curvature direction", rel, it);
    }
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    rel = r.norm() / bnorm;
    z = invdiag.asDiagonal() * r;
    project(z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (rel > opts.rel_tol) {
    throw SolverError("solve_spd: no convergence in " +
                          std::to_string(opts.max_iter) + " iterations",
                      rel, it);
  }
  if (stats) *stats = {it, rel};
  return x;
}

// ---------------------------------------------------------------------------

double l2_norm(const TriMesh& mesh, const std::vector<double>& u) {
  const auto& rule = triangle_rule(2);
  double s = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    for (const auto& q : rule) {
      const double v = q.b0 * u[tri[0]] + q.b1 * u[tri[1]] + q.b2 * u[tri[2]];
      s += q.w * area * v * v;
    }
  }
  return std::sqrt(s);
}

double h1_semi_norm(const TriMesh& mesh, const std::vector<double>& u) {
  double s = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto grads = mesh.basis_gradients(t);
    const auto& tri = mesh.triangles[t];
    const Vec2 g = u[tri[0]] * grads[0] + u[tri[1]] * grads[1] + u[tri[2]] * grads[2];
    s += mesh.triangle_area(t) * dot(g, g);
  }
  return std::sqrt(s);
}

double linf_norm(const std::vector<double>& u) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

double l2_error(const TriMesh& mesh, const std::vector<double>& u,
                const ExactFn& exact) {
  const auto& rule = triangle_rule(4);
  double s = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    for (const auto& q : rule) {
      const double uh = q.b0 * u[tri[0]] + q.b1 * u[tri[1]] + q.b2 * u[tri[2]];
      const double d = uh - exact(quad_point(mesh, t, q));
      s += q.w * area * d * d;
    }
  }
  return std::sqrt(s);
}

double h1_semi_error(const TriMesh& mesh, const std::vector<double>& u,
                     const ExactGradFn& exact_grad) {
  const auto& rule = triangle_rule(2);
  double s = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.triangle_area(t);
    const auto grads = mesh.basis_gradients(t);
    const auto& tri = mesh.triangles[t];
    const Vec2 gh = u[tri[0]] * grads[0] + u[tri[1]] * grads[1] + u[tri[2]] * grads[2];
    for (const auto& q : rule) {
      const Vec2 d = gh - exact_grad(quad_point(mesh, t, q));
      s += q.w * area * dot(d, d);
    }
  }
  return std::sqrt(s);
}

}  // namespace homog
