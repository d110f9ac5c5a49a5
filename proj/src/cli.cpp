#include "homog/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "homog/config.hpp"
#include "homog/corrector.hpp"
#include "homog/fem.hpp"
#include "homog/homogenize.hpp"
#include "homog/mesh.hpp"

namespace homog {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

void write_vertex_field(const std::filesystem::path& path,
                        const std::vector<double>& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string());
  os.precision(17);
  for (double v : f) os << v << "\n";
  if (!os) throw Error("write failed: " + path.string());
}

int cmd_cell(const StudyConfig& cfg, const std::filesystem::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const TriMesh cell_mesh =
      build_unit_cell_mesh(cfg.problem.geometry, cfg.problem.cell_h);
  std::fprintf(stderr, "[cell] mesh: %d vertices, %d triangles (%.0f ms)\n",
               cell_mesh.vertex_count(), cell_mesh.triangle_count(),
               elapsed_ms(t0));
  const CellSolutions cells = build_cell_solutions(cell_mesh, cfg.problem);
  std::filesystem::create_directories(out / "cell");
  save_cell_solutions(cells, out / "cell");
  write_mesh_dump(cell_mesh, out / "cell" / "cell_mesh.txt");
  for (size_t i = 0; i < cells.species.size(); ++i) {
    const auto& e = cells.species[i].eff;
    std::fprintf(stderr,
                 "[cell] species %zu: d_hat = [%.10g %.10g; %.10g %.10g], "
                 "A = %.10g, B = %.10g\n",
                 i + 1, e.d_hat[0], e.d_hat[1], e.d_hat[2], e.d_hat[3], e.A,
                 e.B);
  }
  std::fprintf(stderr, "[cell] |Y1| = %.10g, done in %.0f ms\n", cells.Y1,
               elapsed_ms(t0));
  return 0;
}

int cmd_macro(const StudyConfig& cfg, const std::filesystem::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const TriMesh cell_mesh =
      build_unit_cell_mesh(cfg.problem.geometry, cfg.problem.cell_h);
  const CellSolutions cells = build_cell_solutions(cell_mesh, cfg.problem);
  const UnitCellGeometry macro_geom;
  const TriMesh macro_mesh =
      build_unit_cell_mesh(macro_geom, cfg.problem.macro_h);
  const MacroSolution macro =
      solve_macro(cells, cfg.problem.reactions, cfg.problem.sources, macro_mesh,
                  cfg.problem.picard, cfg.problem.solver_tol);
  std::filesystem::create_directories(out / "macro");
  write_mesh_dump(macro_mesh, out / "macro" / "macro_mesh.txt");
  for (size_t i = 0; i < macro.u0.size(); ++i) {
    write_vertex_field(
        out / "macro" / ("u0_species_" + std::to_string(i + 1) + ".txt"),
        macro.u0[i]);
    std::fprintf(stderr, "[macro] species %zu: max |u0| = %.6g\n", i + 1,
                 linf_norm(macro.u0[i]));
  }
  std::fprintf(stderr, "[macro] %d Picard iterations, done in %.0f ms\n",
               macro.picard_iterations, elapsed_ms(t0));
  return 0;
}

int cmd_micro(const StudyConfig& cfg, const std::filesystem::path& out,
              double eps) {
  cells_per_side_for(eps);  // validates the eps format up front
  const auto t0 = std::chrono::steady_clock::now();
  const TriMesh cell_mesh =
      build_unit_cell_mesh(cfg.problem.geometry, cfg.problem.cell_h);
  const TriMesh fine = tile_perforated_mesh(cell_mesh, eps);
  std::fprintf(stderr, "[micro] eps = %g: %d vertices, %d triangles (%.0f ms)\n",
               eps, fine.vertex_count(), fine.triangle_count(), elapsed_ms(t0));
  const MicroSolution micro =
      solve_micro(eps, cfg.problem, fine, cfg.problem.picard);
  std::filesystem::create_directories(out / "micro");
  write_mesh_dump(fine, out / "micro" / "fine_mesh.txt");
  for (size_t i = 0; i < micro.u.size(); ++i) {
    write_vertex_field(
        out / "micro" / ("u_species_" + std::to_string(i + 1) + ".txt"),
        micro.u[i]);
    std::fprintf(stderr, "[micro] species %zu: max |u| = %.6g\n", i + 1,
                 linf_norm(micro.u[i]));
  }
  std::fprintf(stderr, "[micro] %d Picard iterations, done in %.0f ms\n",
               micro.picard_iterations, elapsed_ms(t0));
  return 0;
}

int cmd_study(const StudyConfig& cfg, const std::filesystem::path& out,
              int threads) {
  const StudyReport report = run_study(cfg, threads);
  emit_report(report, out,
              {ReportFormat::CSV, ReportFormat::JSON, ReportFormat::PLOTDATA});
  bool any_failed = false;
  for (const auto& row : report.rows) any_failed = any_failed || !row.error.empty();
  std::fprintf(stderr, "[study] report written to %s\n", out.string().c_str());
  return any_failed ? 2 : 0;
}

int cmd_mms() {
  const std::vector<int> ns = {8, 16, 32, 64};
  std::vector<double> hs, el2, eh1;
  const auto exact = [](Vec2 x) {
    return std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
  };
  const auto exact_grad = [](Vec2 x) {
    return Vec2{M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
                M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y)};
  };
  const auto f = [&exact](Vec2 x) { return 2.0 * M_PI * M_PI * exact(x); };
  for (int n : ns) {
    const double h = 1.0 / n;
    UnitCellGeometry geom;
    const TriMesh mesh = build_unit_cell_mesh(geom, h);
    FeSpace space(mesh, {EdgeTag::OUTER_CELL}, false);
    const SpMat A = assemble_stiffness(space, [](Vec2) { return 1.0; }, 2);
    const Eigen::VectorXd b = assemble_volume_load(space, f, 4);
    const Eigen::VectorXd u = solve_spd(A, b);
    const std::vector<double> uv = space.vertex_values(u);
    hs.push_back(h);
    el2.push_back(l2_error(mesh, uv, exact));
    eh1.push_back(h1_semi_error(mesh, uv, exact_grad));
    std::printf("h = %-10g L2 error = %-14.6e H1 error = %-14.6e\n", h,
                el2.back(), eh1.back());
  }
  const FitResult fl2 = fit_rate(hs, el2);
  const FitResult fh1 = fit_rate(hs, eh1);
  const bool ok_l2 = fl2.slope >= 1.8 && fl2.slope <= 2.2;
  const bool ok_h1 = fh1.slope >= 0.9 && fh1.slope <= 1.1;
  std::printf("L2 slope = %.4f (expected [1.8, 2.2]) %s\n", fl2.slope,
              ok_l2 ? "PASS" : "FAIL");
  std::printf("H1 slope = %.4f (expected [0.9, 1.1]) %s\n", fh1.slope,
              ok_h1 ? "PASS" : "FAIL");
  return ok_l2 && ok_h1 ? 0 : 2;
}

int cmd_check_cutoff(const StudyConfig& cfg, bool have_config) {
  std::vector<double> eps_list = {0.25, 0.125, 0.0625, 0.03125, 0.015625};
  if (have_config) eps_list = cfg.eps_list;
  std::printf("%-12s %-16s %-16s\n", "eps", "l2_ratio", "grad_ratio");
  double base_l2 = 0.0, base_grad = 0.0, worst = 0.0;
  for (size_t k = 0; k < eps_list.size(); ++k) {
    const BoundaryCutoff cut(eps_list[k]);
    const double rl2 = cut.l2_ratio();
    const double rgrad = cut.grad_l2_ratio();
    std::printf("%-12g %-16.10g %-16.10g\n", eps_list[k], rl2, rgrad);
    if (k == 0) {
      base_l2 = rl2;
      base_grad = rgrad;
    }
    worst = std::max({worst, rl2 / base_l2, base_l2 / rl2, rgrad / base_grad,
                      base_grad / rgrad});
  }
  const bool ok = worst < 2.0;
  std::printf("max variation factor vs coarsest eps = %.6f (< 2 required) %s\n",
              worst, ok ? "PASS" : "FAIL");
  return ok ? 0 : 2;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{
      "homlab: periodic homogenization laboratory for semilinear elliptic "
      "systems on perforated domains"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;
  bool print_defaults = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--threads", threads, "worker cap for study runs");
  app.add_flag("--print-defaults", print_defaults,
               "print the default configuration as JSON and exit");

  CLI::App* sub_cell = app.add_subcommand(
      "cell", "solve the periodic cell problems, write effective quantities");
  CLI::App* sub_macro =
      app.add_subcommand("macro", "solve the upscaled limit problem");
  CLI::App* sub_micro =
      app.add_subcommand("micro", "solve one fine-scale perforated system");
  double micro_eps = 0.25;
  sub_micro->add_option("--eps", micro_eps, "microstructure period, 1/eps integer")
      ->required();
  CLI::App* sub_study = app.add_subcommand(
      "study", "run the eps-sequence corrector convergence study");
  CLI::App* sub_mms =
      app.add_subcommand("mms", "manufactured-solution self test");
  CLI::App* sub_cutoff = app.add_subcommand(
      "check-cutoff", "boundary cutoff norm ratio diagnostics");
  for (CLI::App* sub :
       {sub_cell, sub_macro, sub_micro, sub_study, sub_mms, sub_cutoff}) {
    sub->fallthrough();  // global flags may follow the subcommand name
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (print_defaults) {
      std::cout << serialize_config(default_config()) << std::flush;
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help() << std::flush;
      return 1;
    }
    const bool have_config = !config_path.empty();
    const StudyConfig cfg =
        have_config ? parse_config(config_path) : default_config();
    const std::filesystem::path out(out_dir);
    if (*sub_cell) return cmd_cell(cfg, out);
    if (*sub_macro) return cmd_macro(cfg, out);
    if (*sub_micro) return cmd_micro(cfg, out, micro_eps);
    if (*sub_study) return cmd_study(cfg, out, threads);
    if (*sub_mms) return cmd_mms();
    if (*sub_cutoff) return cmd_check_cutoff(cfg, have_config);
    std::cerr << app.help() << std::flush;
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace homog
