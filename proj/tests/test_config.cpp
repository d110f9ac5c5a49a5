#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "homog/config.hpp"

using namespace homog;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& hay, const char* needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("defaults validate and describe the two-species cell problem") {
  const StudyConfig cfg = default_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.problem.N == 2);
  CHECK(cfg.problem.geometry.hole_radius == 0.25);
  CHECK(cfg.problem.d.size() == 2);
  CHECK(cfg.problem.a[0].value == -1.0);
  CHECK(cfg.eps_list.size() == 4);
  CHECK(cfg.eps_list.front() == 0.25);
  CHECK(cfg.M == 2);
  CHECK(cfg.K == 0);
}

TEST_CASE("empty object parses to the defaults") {
  const StudyConfig cfg = parse_config_text("{}");
  CHECK(serialize_config(cfg) == serialize_config(default_config()));
}

TEST_CASE("serialize and reparse is the identity") {
  StudyConfig cfg = default_config();
  cfg.problem.N = 3;
  cfg.problem.d.assign(3, CoefficientSpec{});
  cfg.problem.d[1].kind = CoefficientSpec::Kind::SMOOTH;
  cfg.problem.d[1].base = 2.0;
  cfg.problem.d[1].delta = 0.25;
  cfg.problem.d[2].kind = CoefficientSpec::Kind::LAYERED;
  cfg.problem.d[2].v_left = 1.0;
  cfg.problem.d[2].v_right = 3.0;
  CoefficientSpec minus_one;
  minus_one.value = -1.0;
  cfg.problem.a.assign(3, minus_one);
  cfg.problem.b.assign(3, CoefficientSpec{});
  cfg.problem.reactions.N = 3;
  cfg.problem.reactions.volume.assign(3, VolumeReaction{});
  for (int i = 0; i < 3; ++i) {
    cfg.problem.reactions.volume[i].kappa.assign(3, 0.5);
    cfg.problem.reactions.volume[i].kappa[i] = 0.0;
  }
  cfg.problem.reactions.surface.assign(3, SurfaceReaction{});
  cfg.problem.reactions.surface[1].kind = SurfaceKind::SATURATING;
  cfg.problem.reactions.set_default_lipschitz();
  cfg.problem.sources.assign(3, SourceSpec{});
  cfg.problem.sources[0].kind = SourceSpec::Kind::CONSTANT;
  cfg.problem.sources[0].value = 2.5;
  cfg.problem.picard.theta = 0.5;
  cfg.eps_list = {0.5, 0.25, 0.2};
  CHECK_NOTHROW(cfg.validate());

  const std::string text = serialize_config(cfg);
  const StudyConfig back = parse_config_text(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.problem.N == 3);
  CHECK(back.problem.d[1].base == 2.0);
  CHECK(back.problem.sources[0].value == 2.5);
  CHECK(back.eps_list == std::vector<double>{0.5, 0.25, 0.2});
}

TEST_CASE("rejections name the offending key by full path") {
  CHECK(contains(message_of("[1,2]"), "root must be a JSON object"));
  CHECK(contains(message_of("{\"frobnicate\": 1}"),
                 "config.frobnicate: unknown key"));
  CHECK(contains(message_of("{\"species\": 1}"), "species: must be >= 2"));
  CHECK(contains(
      message_of("{\"coefficients\": {\"d\": [{\"kind\": \"CONSTANT\", "
                 "\"foo\": 1}, {\"kind\": \"CONSTANT\"}]}}"),
      "coefficients.d[0].foo: unknown key"));
  CHECK(contains(
      message_of("{\"coefficients\": {\"d\": [{\"kind\": \"WAVY\"}, "
                 "{\"kind\": \"CONSTANT\"}]}}"),
      "unknown coefficient kind 'WAVY'"));
  CHECK(contains(
      message_of("{\"coefficients\": {\"d\": [{\"kind\": \"CONSTANT\", "
                 "\"value\": 0.0}, {\"kind\": \"CONSTANT\"}]}}"),
      "diffusion must be strictly positive"));
  CHECK(contains(
      message_of(
          "{\"coefficients\": {\"a\": [{\"kind\": \"CONSTANT\", \"value\": "
          "1.0}, {\"kind\": \"CONSTANT\", \"value\": -1.0}]}}"),
      "coefficients.a[0]: must be non-positive"));
  CHECK(contains(message_of("{\"geometry\": {\"hole_radius\": 0.5}}"),
                 "geometry.hole_radius"));
  CHECK(contains(message_of("{\"geometry\": {\"hole_center\": [0.1, 0.5], "
                            "\"hole_radius\": 0.25}}"),
                 "hole must stay strictly inside the cell"));
  CHECK(contains(message_of("{\"study\": {\"eps_list\": [0.3]}}"),
                 "1/eps must be an integer"));
  CHECK(contains(message_of("{\"study\": {\"eps_list\": [0.125, 0.25]}}"),
                 "must be strictly decreasing"));
  CHECK(contains(message_of("{\"study\": {\"M\": 3}}"),
                 "only the second-order expansion is supported"));
  CHECK(contains(message_of("{\"study\": {\"K\": 1}}"),
                 "study.K: must satisfy 0 <= K <= M - 2"));
  CHECK(contains(message_of("{\"discretization\": {\"cell_h\": 0.6}}"),
                 "discretization.cell_h"));
  CHECK(contains(message_of("{\"picard\": {\"theta\": 0.0}}"), "theta"));
  CHECK(contains(message_of("{\"solver\": {\"tol\": \"tight\"}}"),
                 "solver.tol: expected a number"));
  CHECK(contains(message_of("not json"), "config is not valid JSON"));
}

TEST_CASE("positive boundary coefficient requires the explicit override") {
  const std::string body =
      "\"coefficients\": {\"a\": [{\"kind\": \"CONSTANT\", \"value\": 0.5}, "
      "{\"kind\": \"CONSTANT\", \"value\": -1.0}]}";
  CHECK_THROWS_AS(parse_config_text("{" + body + "}"), ConfigError);
  const StudyConfig cfg =
      parse_config_text("{" + body + ", \"allow_positive_a\": true}");
  CHECK(cfg.problem.a[0].value == 0.5);
  CHECK(cfg.problem.allow_positive_a);
}

TEST_CASE("coefficient builders match their formulas") {
  CoefficientSpec smooth;
  smooth.kind = CoefficientSpec::Kind::SMOOTH;
  smooth.base = 2.0;
  smooth.delta = 0.5;
  const Coeff f = build_coeff(smooth);
  CHECK(f({0.25, 0.25}) == doctest::Approx(2.0 * 1.5).epsilon(1e-15));
  CHECK(f({0.5, 0.5}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(coeff_min(smooth) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(coeff_max(smooth) == doctest::Approx(3.0).epsilon(1e-15));

  CoefficientSpec lay;
  lay.kind = CoefficientSpec::Kind::LAYERED;
  lay.v_left = 1.0;
  lay.v_right = 4.0;
  lay.split = 0.5;
  const Coeff g = build_coeff(lay);
  CHECK(g({0.2, 0.9}) == 1.0);
  CHECK(g({0.8, 0.1}) == 4.0);
  CHECK(coeff_min(lay) == 1.0);
  CHECK(coeff_max(lay) == 4.0);

  SourceSpec sine;
  sine.kind = SourceSpec::Kind::SINE;
  sine.amplitude = 1.5;
  const Coeff s = build_source(sine);
  CHECK(s({0.5, 0.5}) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(s({0.0, 0.7}) == doctest::Approx(0.0).epsilon(1e-15));
  const auto sg = build_source_gradient(sine);
  const double h = 1e-6;
  const Vec2 x{0.3, 0.6};
  const double fdx = (s({x.x + h, x.y}) - s({x.x - h, x.y})) / (2 * h);
  const double fdy = (s({x.x, x.y + h}) - s({x.x, x.y - h})) / (2 * h);
  CHECK(sg(x).x == doctest::Approx(fdx).epsilon(1e-8));
  CHECK(sg(x).y == doctest::Approx(fdy).epsilon(1e-8));
}

TEST_CASE("shipped configs parse and validate") {
  namespace fs = std::filesystem;
  const fs::path dir = CONFIGS_DIR;
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    INFO("config file ", entry.path().string());
    CHECK_NOTHROW(parse_config(entry.path()));
  }
  CHECK(seen >= 4);

  const StudyConfig lin = parse_config(dir / "acceptance_linear.json");
  CHECK(lin.problem.d[0].kind == CoefficientSpec::Kind::SMOOTH);
  CHECK(lin.problem.reactions.volume[0].kind == VolumeKind::LINEAR_EXCHANGE);
  const StudyConfig sat = parse_config(dir / "acceptance_saturating.json");
  CHECK(sat.problem.reactions.surface[0].kind == SurfaceKind::SATURATING);
  const StudyConfig lam = parse_config(dir / "laminate.json");
  CHECK(lam.problem.d[0].kind == CoefficientSpec::Kind::LAYERED);
  CHECK(lam.problem.geometry.hole_radius == 0.0);
  const StudyConfig triv = parse_config(dir / "trivial.json");
  CHECK(triv.problem.d[0].kind == CoefficientSpec::Kind::CONSTANT);
  CHECK(triv.problem.d[0].value == 2.0);
}

TEST_CASE("missing config file reports its path") {
  try {
    parse_config("/nonexistent/nope.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "cannot open config file"));
    CHECK(contains(e.what(), "nope.json"));
  }
}
