#include "homog/corrector.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "homog/fem.hpp"
#include "json.hpp"

namespace homog {

namespace {

Vec2 bary_point(const TriMesh& mesh, int t, const std::array<double, 3>& b) {
  const auto& tri = mesh.triangles[t];
  const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]],
             p2 = mesh.vertices[tri[2]];
  return {b[0] * p0.x + b[1] * p1.x + b[2] * p2.x,
          b[0] * p0.y + b[1] * p1.y + b[2] * p2.y};
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

MicroSolution solve_micro(double eps, const ProblemSpec& spec,
                          const TriMesh& fine_mesh, const PicardConfig& picard,
                          const std::vector<std::vector<double>>* initial) {
  const int N = spec.N;
  FeSpace space(fine_mesh, {EdgeTag::EXTERIOR}, false);
  const int n = space.ndof();
  const SpMat M = assemble_mass(space, [](Vec2) { return 1.0; }, 2);
  const Eigen::VectorXd lump = space.lumped_mass();

  std::vector<SpMat> K(N), Mb(N);
  std::vector<Eigen::VectorXd> fvec(N);
  for (int i = 0; i < N; ++i) {
    const Coeff d = build_coeff(spec.d[i]);
    const Coeff a = build_coeff(spec.a[i]);
    const Coeff b = build_coeff(spec.b[i]);
    const auto wrapped = [eps](const Coeff& c) {
      return Coeff([c, eps](Vec2 x) { return c(wrap_to_cell(x, eps).y); });
    };
    K[i] = assemble_stiffness(space, wrapped(d), 2);
    const SpMat Ma = assemble_boundary_mass(space, EdgeTag::HOLE, wrapped(a), 3);
    K[i] = (K[i] - eps * Ma).pruned();
    Mb[i] = assemble_boundary_mass(space, EdgeTag::HOLE, wrapped(b), 3);
    fvec[i] = assemble_volume_load(space, build_source(spec.sources[i]), 2);
  }

  auto reactions_fn = [&](const State& u) {
    State loads(N);
    std::vector<double> point(N);
    for (int i = 0; i < N; ++i) {
      Eigen::VectorXd r(n), F(n);
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < N; ++j) point[j] = u[j][k];
        r[k] = spec.reactions.eval_R(i, point);
        F[k] = spec.reactions.eval_F(i, u[i][k]);
      }
      loads[i] = M * r + fvec[i] - eps * (Mb[i] * F);
    }
    return loads;
  };

  State warm(N, Eigen::VectorXd::Zero(n));
  State u0(N, Eigen::VectorXd::Zero(n));
  if (initial) {
    if (static_cast<int>(initial->size()) != N) {
      throw AssemblyError("solve_micro: initial guess species count mismatch");
    }
    for (int i = 0; i < N; ++i) {
      const auto& vals = (*initial)[i];
      if (static_cast<int>(vals.size()) != fine_mesh.vertex_count()) {
        throw AssemblyError("solve_micro: initial guess size mismatch");
      }
      for (int v = 0; v < fine_mesh.vertex_count(); ++v) {
        const int dv = space.dof(v);
        if (dv >= 0) u0[i][dv] = vals[v];
      }
    }
    warm = u0;
  }

  auto apply_fn = [&](const State& loads) {
    State sol(N);
    for (int i = 0; i < N; ++i) {
      SolveOptions opts;
      opts.rel_tol = spec.solver_tol;
      opts.max_iter = spec.solver_max_iter;
      opts.initial = &warm[i];
      sol[i] = solve_spd(K[i], loads[i], opts);
      warm[i] = sol[i];
    }
    return sol;
  };

  auto norm_fn = [&](const State& u) {
    double s = 0.0;
    for (const auto& v : u) s += v.dot(lump.asDiagonal() * v);
    return std::sqrt(s);
  };

  PicardResult res = picard_solve(apply_fn, reactions_fn, u0, picard, norm_fn);

  MicroSolution out;
  out.picard_iterations = res.iterations;
  out.u.resize(N);
  for (int i = 0; i < N; ++i) out.u[i] = space.vertex_values(res.solution[i]);
  return out;
}

std::vector<double> corrector_norms(const TriMesh& fine_mesh,
                                    const std::vector<std::vector<double>>& u,
                                    const ReconGradFn& recon_grad) {
  const int N = static_cast<int>(u.size());
  const auto& rule = triangle_rule(2);
  std::vector<double> acc(N, 0.0);
  for (int t = 0; t < fine_mesh.triangle_count(); ++t) {
    const double area = fine_mesh.triangle_area(t);
    const auto grads = fine_mesh.basis_gradients(t);
    const auto& tri = fine_mesh.triangles[t];
    for (int i = 0; i < N; ++i) {
      const Vec2 gh = u[i][tri[0]] * grads[0] + u[i][tri[1]] * grads[1] +
                      u[i][tri[2]] * grads[2];
      for (const auto& q : rule) {
        const Vec2 gr = recon_grad(i, t, {q.b0, q.b1, q.b2});
        const Vec2 diff = gh - gr;
        acc[i] += q.w * area * dot(diff, diff);
      }
    }
  }
  for (double& a : acc) a = std::sqrt(a);
  return acc;
}

double aggregate_norm(const std::vector<double>& per_species) {
  double s = 0.0;
  for (double v : per_species) s += v * v;
  return std::sqrt(s);
}

FitResult fit_rate(const std::vector<double>& eps_list,
                   const std::vector<double>& errors) {
  if (eps_list.size() != errors.size() || eps_list.size() < 2) {
    throw Error("fit_rate: needs matching lists with at least two points");
  }
  const int n = static_cast<int>(eps_list.size());
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(eps_list[i] > 0.0) || !(errors[i] > 0.0)) {
      throw Error("fit_rate: eps and errors must be positive");
    }
    lx[i] = std::log(eps_list[i]);
    ly[i] = std::log(errors[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error("fit_rate: eps values are all equal");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 1e-30) {
    fit.r2 = 1.0;
  } else {
    double ssres = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pred = fit.intercept + fit.slope * lx[i];
      ssres += (ly[i] - pred) * (ly[i] - pred);
    }
    fit.r2 = 1.0 - ssres / syy;
  }
  return fit;
}

namespace {

void run_one_eps(StudyRow& row, double eps, const StudyConfig& cfg,
                 const TriMesh& cell_mesh, const TriMesh& macro_mesh,
                 const CellSolutions& cells, const MacroSolution& macro) {
  const ProblemSpec& p = cfg.problem;
  const int N = p.N;
  const TriMesh fine = tile_perforated_mesh(cell_mesh, eps);
  row.h = fine.max_edge_length();

  const ExpansionReconstruction recon(eps, fine, cell_mesh, macro_mesh, cells,
                                      macro, p.reactions, p.sources);

  // reconstruction values seed the Picard iteration
  const int V = fine.vertex_count();
  std::vector<std::vector<double>> init(N, std::vector<double>(V, 0.0));
  std::vector<char> seen(V, 0);
  for (int t = 0; t < fine.triangle_count(); ++t) {
    for (int c = 0; c < 3; ++c) {
      const int v = fine.triangles[t][c];
      if (seen[v]) continue;
      seen[v] = 1;
      std::array<double, 3> b{0.0, 0.0, 0.0};
      b[c] = 1.0;
      for (int i = 0; i < N; ++i) init[i][v] = recon.value(i, t, b);
    }
  }

  const MicroSolution micro = solve_micro(eps, p, fine, p.picard, &init);
  row.picard_iters = micro.picard_iterations;

  row.corrector_Vnorm = corrector_norms(
      fine, micro.u, [&recon](int i, int t, const std::array<double, 3>& b) {
        return recon.gradient(i, t, b);
      });
  row.naive_Vnorm = corrector_norms(
      fine, micro.u,
      [&recon, &fine](int i, int t, const std::array<double, 3>& b) {
        return recon.macro_gradient(i, bary_point(fine, t, b));
      });
  row.aggregate = aggregate_norm(row.corrector_Vnorm);
  row.naive_aggregate = aggregate_norm(row.naive_Vnorm);

  row.l2_err_u0.resize(N);
  row.linf.resize(N);
  for (int i = 0; i < N; ++i) {
    row.l2_err_u0[i] = l2_error(
        fine, micro.u[i], [&recon, i](Vec2 x) { return recon.macro_value(i, x); });
    row.linf[i] = linf_norm(micro.u[i]);
  }

  const BoundaryCutoff cut(eps);
  row.cutoff_ratio_l2 = cut.l2_ratio();
  row.cutoff_ratio_grad = cut.grad_l2_ratio();
}

}  // namespace

StudyReport run_study(const StudyConfig& cfg, int threads) {
  cfg.validate();
  StudyReport report;
  report.config = cfg;

  const auto t0 = std::chrono::steady_clock::now();
  const TriMesh cell_mesh =
      build_unit_cell_mesh(cfg.problem.geometry, cfg.problem.cell_h);
  const CellSolutions cells = build_cell_solutions(cell_mesh, cfg.problem);
  std::fprintf(stderr, "[study] cell stage done in %.0f ms (|Y1| = %.6f)\n",
               elapsed_ms(t0), cells.Y1);

  const auto t1 = std::chrono::steady_clock::now();
  const UnitCellGeometry macro_geom;  // hole-free unit square
  const TriMesh macro_mesh = build_unit_cell_mesh(macro_geom, cfg.problem.macro_h);
  const MacroSolution macro =
      solve_macro(cells, cfg.problem.reactions, cfg.problem.sources, macro_mesh,
                  cfg.problem.picard, cfg.problem.solver_tol);
  report.macro_picard_iterations = macro.picard_iterations;
  std::fprintf(stderr,
               "[study] macro stage done in %.0f ms (%d Picard iterations)\n",
               elapsed_ms(t1), macro.picard_iterations);

  const int n_eps = static_cast<int>(cfg.eps_list.size());
  report.rows.resize(n_eps);
  std::atomic<int> next{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= n_eps) return;
      const double eps = cfg.eps_list[idx];
      StudyRow row;
      row.eps = eps;
      const auto te = std::chrono::steady_clock::now();
      try {
        run_one_eps(row, eps, cfg, cell_mesh, macro_mesh, cells, macro);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.wall_ms = elapsed_ms(te);
      {
        const std::lock_guard<std::mutex> lock(log_mutex);
        if (row.error.empty()) {
          std::fprintf(stderr,
                       "[study] eps = %g done in %.0f ms (V-error %.6e)\n", eps,
                       row.wall_ms, row.aggregate);
        } else {
          std::fprintf(stderr, "[study] eps = %g FAILED: %s\n", eps,
                       row.error.c_str());
        }
      }
      report.rows[idx] = std::move(row);
    }
  };

  const int n_workers = std::max(1, std::min(threads, n_eps));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> fe, fa, fn;
  std::vector<std::vector<double>> fs(cfg.problem.N);
  for (const auto& row : report.rows) {
    if (!row.error.empty() || !(row.aggregate > 0.0)) continue;
    fe.push_back(row.eps);
    fa.push_back(row.aggregate);
    fn.push_back(row.naive_aggregate);
    for (int i = 0; i < cfg.problem.N; ++i) fs[i].push_back(row.corrector_Vnorm[i]);
  }
  if (fe.size() >= 3) {
    report.fits_valid = true;
    report.aggregate_fit = fit_rate(fe, fa);
    report.naive_fit = fit_rate(fe, fn);
    report.species_fit.resize(cfg.problem.N);
    for (int i = 0; i < cfg.problem.N; ++i) {
      report.species_fit[i] = fit_rate(fe, fs[i]);
    }
    std::fprintf(stderr, "[study] fitted rate %.4f (R^2 %.4f)\n",
                 report.aggregate_fit.slope, report.aggregate_fit.r2);
  }
  return report;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::json fit_to_json(const FitResult& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
}

void emit_csv(const StudyReport& report, const std::filesystem::path& dir) {
  std::ofstream os(dir / "report.csv");
  if (!os) throw Error("cannot open " + (dir / "report.csv").string());
  os << "eps,h,species,corrector_Vnorm,l2_err_u0,cutoff_ratio_l2,"
        "cutoff_ratio_grad,picard_iters,wall_ms\n";
  for (const auto& row : report.rows) {
    if (!row.error.empty()) continue;
    for (size_t i = 0; i < row.corrector_Vnorm.size(); ++i) {
      os << format_double(row.eps) << ',' << format_double(row.h) << ','
         << (i + 1) << ',' << format_double(row.corrector_Vnorm[i]) << ','
         << format_double(row.l2_err_u0[i]) << ','
         << format_double(row.cutoff_ratio_l2) << ','
         << format_double(row.cutoff_ratio_grad) << ',' << row.picard_iters
         << ',' << format_double(row.wall_ms) << "\n";
    }
  }
  if (!os) throw Error("write failed: " + (dir / "report.csv").string());
}

void emit_json(const StudyReport& report, const std::filesystem::path& dir) {
  nlohmann::json js;
  js["config"] = nlohmann::json::parse(serialize_config(report.config));
  js["macro_picard_iterations"] = report.macro_picard_iterations;
  js["rows"] = nlohmann::json::array();
  js["failures"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    if (!row.error.empty()) {
      js["failures"].push_back({{"eps", row.eps}, {"error", row.error}});
      continue;
    }
    nlohmann::json jr;
    jr["eps"] = row.eps;
    jr["h"] = row.h;
    jr["corrector_Vnorm"] = row.corrector_Vnorm;
    jr["naive_Vnorm"] = row.naive_Vnorm;
    jr["l2_err_u0"] = row.l2_err_u0;
    jr["linf"] = row.linf;
    jr["aggregate"] = row.aggregate;
    jr["naive_aggregate"] = row.naive_aggregate;
    jr["cutoff_ratio_l2"] = row.cutoff_ratio_l2;
    jr["cutoff_ratio_grad"] = row.cutoff_ratio_grad;
    jr["picard_iters"] = row.picard_iters;
    jr["wall_ms"] = row.wall_ms;
    js["rows"].push_back(std::move(jr));
  }
  if (report.fits_valid) {
    js["fits"]["aggregate"] = fit_to_json(report.aggregate_fit);
    js["fits"]["naive"] = fit_to_json(report.naive_fit);
    js["fits"]["species"] = nlohmann::json::array();
    for (const auto& fit : report.species_fit) {
      js["fits"]["species"].push_back(fit_to_json(fit));
    }
  }
  std::ofstream os(dir / "summary.json");
  if (!os) throw Error("cannot open " + (dir / "summary.json").string());
  os << js.dump(2) << "\n";
  if (!os) throw Error("write failed: " + (dir / "summary.json").string());
}

void emit_plotdata(const StudyReport& report, const std::filesystem::path& dir) {
  const int N = report.config.problem.N;
  for (int i = 0; i < N; ++i) {
    const auto path =
        dir / ("plot_species_" + std::to_string(i + 1) + ".dat");
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string());
    for (const auto& row : report.rows) {
      if (!row.error.empty() || !(row.corrector_Vnorm[i] > 0.0)) continue;
      os << format_double(std::log10(row.eps)) << ' '
         << format_double(std::log10(row.corrector_Vnorm[i])) << "\n";
    }
    if (!os) throw Error("write failed: " + path.string());
  }
}

}  // namespace

void emit_report(const StudyReport& report, const std::filesystem::path& dir,
                 const std::vector<ReportFormat>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string());
  for (const ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::CSV:
        emit_csv(report, dir);
        break;
      case ReportFormat::JSON:
        emit_json(report, dir);
        break;
      case ReportFormat::PLOTDATA:
        emit_plotdata(report, dir);
        break;
    }
  }
}

}  // namespace homog
