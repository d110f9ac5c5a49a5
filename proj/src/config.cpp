#include "homog/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace homog {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
  }
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

CoefficientSpec parse_coefficient(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  if (!obj.contains("kind")) fail(path + ".kind", "missing required key");
  const std::string kind = obj.at("kind").get<std::string>();
  CoefficientSpec spec;
  if (kind == "CONSTANT") {
    reject_unknown(obj, path, {"kind", "value"});
    spec.kind = CoefficientSpec::Kind::CONSTANT;
    spec.value = get_number(obj, path, "value", spec.value);
  } else if (kind == "SMOOTH") {
    reject_unknown(obj, path, {"kind", "base", "delta"});
    spec.kind = CoefficientSpec::Kind::SMOOTH;
    spec.base = get_number(obj, path, "base", spec.base);
    spec.delta = get_number(obj, path, "delta", spec.delta);
    if (spec.delta < 0.0 || spec.delta >= 1.0) {
      fail(path + ".delta", "must lie in [0, 1)");
    }
  } else if (kind == "LAYERED") {
    reject_unknown(obj, path, {"kind", "v_left", "v_right", "split"});
    spec.kind = CoefficientSpec::Kind::LAYERED;
    spec.v_left = get_number(obj, path, "v_left", spec.v_left);
    spec.v_right = get_number(obj, path, "v_right", spec.v_right);
    spec.split = get_number(obj, path, "split", spec.split);
    if (!(spec.split > 0.0 && spec.split < 1.0)) {
      fail(path + ".split", "must lie in (0, 1)");
    }
  } else {
    fail(path + ".kind", "unknown coefficient kind '" + kind + "'");
  }
  return spec;
}

json coefficient_to_json(const CoefficientSpec& spec) {
  switch (spec.kind) {
    case CoefficientSpec::Kind::CONSTANT:
      return {{"kind", "CONSTANT"}, {"value", spec.value}};
    case CoefficientSpec::Kind::SMOOTH:
      return {{"kind", "SMOOTH"}, {"base", spec.base}, {"delta", spec.delta}};
    case CoefficientSpec::Kind::LAYERED:
      return {{"kind", "LAYERED"},
              {"v_left", spec.v_left},
              {"v_right", spec.v_right},
              {"split", spec.split}};
  }
  throw ConfigError("unreachable coefficient kind");
}

SourceSpec parse_source(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  if (!obj.contains("kind")) fail(path + ".kind", "missing required key");
  const std::string kind = obj.at("kind").get<std::string>();
  SourceSpec spec;
  if (kind == "CONSTANT") {
    reject_unknown(obj, path, {"kind", "value"});
    spec.kind = SourceSpec::Kind::CONSTANT;
    spec.value = get_number(obj, path, "value", spec.value);
  } else if (kind == "SINE") {
    reject_unknown(obj, path, {"kind", "amplitude"});
    spec.kind = SourceSpec::Kind::SINE;
    spec.amplitude = get_number(obj, path, "amplitude", spec.amplitude);
  } else {
    fail(path + ".kind", "unknown source kind '" + kind + "'");
  }
  return spec;
}

json source_to_json(const SourceSpec& spec) {
  if (spec.kind == SourceSpec::Kind::CONSTANT) {
    return {{"kind", "CONSTANT"}, {"value", spec.value}};
  }
  return {{"kind", "SINE"}, {"amplitude", spec.amplitude}};
}

VolumeReaction parse_volume_reaction(const json& obj, const std::string& path,
                                     int N) {
  if (!obj.is_object()) fail(path, "expected an object");
  if (!obj.contains("kind")) fail(path + ".kind", "missing required key");
  const std::string kind = obj.at("kind").get<std::string>();
  VolumeReaction r;
  if (kind == "LINEAR_EXCHANGE") {
    reject_unknown(obj, path, {"kind", "kappa"});
    r.kind = VolumeKind::LINEAR_EXCHANGE;
    r.kappa.assign(N, 0.0);
    if (obj.contains("kappa")) {
      const auto& arr = obj.at("kappa");
      if (!arr.is_array() || static_cast<int>(arr.size()) != N) {
        fail(path + ".kappa", "expected an array with one entry per species");
      }
      for (int j = 0; j < N; ++j) r.kappa[j] = arr[j].get<double>();
    }
  } else if (kind == "SATURATING") {
    reject_unknown(obj, path, {"kind", "sigma", "lambda"});
    r.kind = VolumeKind::SATURATING;
    r.sigma = get_number(obj, path, "sigma", 1.0);
    r.lambda = get_number(obj, path, "lambda", 1.0);
  } else {
    fail(path + ".kind", "unknown volume reaction kind '" + kind + "'");
  }
  return r;
}

json volume_reaction_to_json(const VolumeReaction& r) {
  if (r.kind == VolumeKind::LINEAR_EXCHANGE) {
    return {{"kind", "LINEAR_EXCHANGE"}, {"kappa", r.kappa}};
  }
  return {{"kind", "SATURATING"}, {"sigma", r.sigma}, {"lambda", r.lambda}};
}

SurfaceReaction parse_surface_reaction(const json& obj,
                                       const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  if (!obj.contains("kind")) fail(path + ".kind", "missing required key");
  reject_unknown(obj, path, {"kind"});
  const std::string kind = obj.at("kind").get<std::string>();
  SurfaceReaction r;
  if (kind == "LINEAR") {
    r.kind = SurfaceKind::LINEAR;
  } else if (kind == "SATURATING") {
    r.kind = SurfaceKind::SATURATING;
  } else {
    fail(path + ".kind", "unknown surface reaction kind '" + kind + "'");
  }
  return r;
}

template <typename T, typename ParseFn>
std::vector<T> parse_per_species(const json& parent, const std::string& path,
                                 const char* key, int N,
                                 const std::vector<T>& fallback,
                                 const ParseFn& parse_one) {
  if (!parent.contains(key)) return fallback;
  const auto& arr = parent.at(key);
  const std::string kpath = path + "." + key;
  if (!arr.is_array()) fail(kpath, "expected an array");
  if (static_cast<int>(arr.size()) != N) {
    fail(kpath, "expected one entry per species (" + std::to_string(N) + ")");
  }
  std::vector<T> out;
  out.reserve(N);
  for (int i = 0; i < N; ++i) {
    out.push_back(parse_one(arr[i], kpath + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

Coeff build_coeff(const CoefficientSpec& spec) {
  switch (spec.kind) {
    case CoefficientSpec::Kind::CONSTANT: {
      const double v = spec.value;
      return [v](Vec2) { return v; };
    }
    case CoefficientSpec::Kind::SMOOTH: {
      const double base = spec.base, delta = spec.delta;
      return [base, delta](Vec2 y) {
        return base *
               (1.0 + delta * std::sin(2.0 * kPi * y.x) * std::sin(2.0 * kPi * y.y));
      };
    }
    case CoefficientSpec::Kind::LAYERED: {
      const double vl = spec.v_left, vr = spec.v_right, split = spec.split;
      return [vl, vr, split](Vec2 y) { return y.x < split ? vl : vr; };
    }
  }
  throw ConfigError("unreachable coefficient kind");
}

double coeff_min(const CoefficientSpec& spec) {
  switch (spec.kind) {
    case CoefficientSpec::Kind::CONSTANT: return spec.value;
    case CoefficientSpec::Kind::SMOOTH:
      return spec.base >= 0.0 ? spec.base * (1.0 - spec.delta)
                              : spec.base * (1.0 + spec.delta);
    case CoefficientSpec::Kind::LAYERED:
      return std::min(spec.v_left, spec.v_right);
  }
  throw ConfigError("unreachable coefficient kind");
}

double coeff_max(const CoefficientSpec& spec) {
  switch (spec.kind) {
    case CoefficientSpec::Kind::CONSTANT: return spec.value;
    case CoefficientSpec::Kind::SMOOTH:
      return spec.base >= 0.0 ? spec.base * (1.0 + spec.delta)
                              : spec.base * (1.0 - spec.delta);
    case CoefficientSpec::Kind::LAYERED:
      return std::max(spec.v_left, spec.v_right);
  }
  throw ConfigError("unreachable coefficient kind");
}

Coeff build_source(const SourceSpec& spec) {
  if (spec.kind == SourceSpec::Kind::CONSTANT) {
    const double v = spec.value;
    return [v](Vec2) { return v; };
  }
  const double amp = spec.amplitude;
  return [amp](Vec2 x) {
    return amp * std::sin(kPi * x.x) * std::sin(kPi * x.y);
  };
}

std::function<Vec2(Vec2)> build_source_gradient(const SourceSpec& spec) {
  if (spec.kind == SourceSpec::Kind::CONSTANT) {
    return [](Vec2) { return Vec2{0.0, 0.0}; };
  }
  const double amp = spec.amplitude;
  return [amp](Vec2 x) {
    return Vec2{amp * kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y),
                amp * kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y)};
  };
}

void ProblemSpec::validate() const {
  if (N < 2) throw ConfigError("species: must be >= 2");
  auto check_count = [&](const std::vector<CoefficientSpec>& v, const char* key) {
    if (static_cast<int>(v.size()) != N) {
      fail(std::string("coefficients.") + key, "expected one entry per species");
    }
  };
  check_count(d, "d");
  check_count(a, "a");
  check_count(b, "b");
  for (int i = 0; i < N; ++i) {
    if (!(coeff_min(d[i]) > 0.0)) {
      fail("coefficients.d[" + std::to_string(i) + "]",
           "diffusion must be strictly positive");
    }
    if (!allow_positive_a && coeff_max(a[i]) > 0.0) {
      fail("coefficients.a[" + std::to_string(i) + "]",
           "must be non-positive (set allow_positive_a to override)");
    }
  }
  if (static_cast<int>(sources.size()) != N) {
    fail("sources", "expected one entry per species");
  }
  if (reactions.N != N) {
    fail("reactions", "species count disagrees with 'species'");
  }
  reactions.validate();
  if (!(geometry.hole_radius >= 0.0) || geometry.hole_radius >= 0.5) {
    fail("geometry.hole_radius", "must lie in [0, 0.5)");
  }
  const Vec2 c = geometry.hole_center;
  const double margin = std::min(std::min(c.x, 1.0 - c.x), std::min(c.y, 1.0 - c.y));
  if (geometry.has_hole() && margin <= geometry.hole_radius) {
    fail("geometry.hole_center", "hole must stay strictly inside the cell");
  }
  if (!(cell_h > 0.0) || cell_h > 0.5) {
    fail("discretization.cell_h", "must lie in (0, 0.5]");
  }
  if (!(macro_h > 0.0) || macro_h > 0.5) {
    fail("discretization.macro_h", "must lie in (0, 0.5]");
  }
  if (!(solver_tol > 0.0)) fail("solver.tol", "must be > 0");
  if (solver_max_iter < 1) fail("solver.max_iter", "must be >= 1");
  picard.validate();
}

void StudyConfig::validate() const {
  problem.validate();
  if (eps_list.empty()) fail("study.eps_list", "must not be empty");
  for (size_t k = 0; k < eps_list.size(); ++k) {
    try {
      cells_per_side_for(eps_list[k]);
    } catch (const ConfigError& e) {
      fail("study.eps_list[" + std::to_string(k) + "]", e.what());
    }
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) {
      fail("study.eps_list", "must be strictly decreasing");
    }
  }
  if (M != 2) fail("study.M", "only the second-order expansion is supported");
  if (K < 0 || K > M - 2) fail("study.K", "must satisfy 0 <= K <= M - 2");
}

StudyConfig default_config() {
  StudyConfig cfg;
  ProblemSpec& p = cfg.problem;
  p.N = 2;
  p.d.assign(2, CoefficientSpec{});
  CoefficientSpec minus_one;
  minus_one.value = -1.0;
  p.a.assign(2, minus_one);
  p.b.assign(2, CoefficientSpec{});
  p.reactions.N = 2;
  p.reactions.volume.assign(2, VolumeReaction{});
  for (int i = 0; i < 2; ++i) {
    p.reactions.volume[i].kappa.assign(2, 1.0);
    p.reactions.volume[i].kappa[i] = 0.0;
  }
  p.reactions.surface.assign(2, SurfaceReaction{});
  p.reactions.set_default_lipschitz();
  p.sources.assign(2, SourceSpec{});
  p.geometry.hole_radius = 0.25;
  return cfg;
}

StudyConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(root, "config",
                 {"species", "coefficients", "reactions", "sources", "geometry",
                  "discretization", "solver", "picard", "study",
                  "allow_positive_a"});

  StudyConfig cfg = default_config();
  ProblemSpec& p = cfg.problem;
  const int N = get_int(root, "config", "species", 2);
  if (N < 2) fail("species", "must be >= 2");
  if (N != 2) {
    // defaults were built for two species; rebuild for N
    p.d.assign(N, CoefficientSpec{});
    CoefficientSpec minus_one;
    minus_one.value = -1.0;
    p.a.assign(N, minus_one);
    p.b.assign(N, CoefficientSpec{});
    p.reactions.N = N;
    p.reactions.volume.assign(N, VolumeReaction{});
    for (int i = 0; i < N; ++i) {
      p.reactions.volume[i].kappa.assign(N, 1.0);
      p.reactions.volume[i].kappa[i] = 0.0;
    }
    p.reactions.surface.assign(N, SurfaceReaction{});
    p.reactions.set_default_lipschitz();
    p.sources.assign(N, SourceSpec{});
  }
  p.N = N;

  if (root.contains("coefficients")) {
    const auto& co = root.at("coefficients");
    if (!co.is_object()) fail("coefficients", "expected an object");
    reject_unknown(co, "coefficients", {"d", "a", "b"});
    p.d = parse_per_species<CoefficientSpec>(co, "coefficients", "d", N, p.d,
                                             parse_coefficient);
    p.a = parse_per_species<CoefficientSpec>(co, "coefficients", "a", N, p.a,
                                             parse_coefficient);
    p.b = parse_per_species<CoefficientSpec>(co, "coefficients", "b", N, p.b,
                                             parse_coefficient);
  }
  if (root.contains("reactions")) {
    const auto& re = root.at("reactions");
    if (!re.is_object()) fail("reactions", "expected an object");
    reject_unknown(re, "reactions", {"volume", "surface"});
    p.reactions.volume = parse_per_species<VolumeReaction>(
        re, "reactions", "volume", N, p.reactions.volume,
        [N](const json& o, const std::string& path) {
          return parse_volume_reaction(o, path, N);
        });
    p.reactions.surface = parse_per_species<SurfaceReaction>(
        re, "reactions", "surface", N, p.reactions.surface,
        parse_surface_reaction);
    p.reactions.N = N;
    p.reactions.set_default_lipschitz();
  }
  p.sources = parse_per_species<SourceSpec>(root, "config", "sources", N,
                                            p.sources, parse_source);
  if (root.contains("geometry")) {
    const auto& ge = root.at("geometry");
    if (!ge.is_object()) fail("geometry", "expected an object");
    reject_unknown(ge, "geometry", {"hole_center", "hole_radius"});
    if (ge.contains("hole_center")) {
      const auto& hc = ge.at("hole_center");
      if (!hc.is_array() || hc.size() != 2) {
        fail("geometry.hole_center", "expected [x, y]");
      }
      p.geometry.hole_center = {hc[0].get<double>(), hc[1].get<double>()};
    }
    p.geometry.hole_radius =
        get_number(ge, "geometry", "hole_radius", p.geometry.hole_radius);
  }
  if (root.contains("discretization")) {
    const auto& di = root.at("discretization");
    if (!di.is_object()) fail("discretization", "expected an object");
    reject_unknown(di, "discretization", {"cell_h", "macro_h"});
    p.cell_h = get_number(di, "discretization", "cell_h", p.cell_h);
    p.macro_h = get_number(di, "discretization", "macro_h", p.macro_h);
  }
  if (root.contains("solver")) {
    const auto& so = root.at("solver");
    if (!so.is_object()) fail("solver", "expected an object");
    reject_unknown(so, "solver", {"tol", "max_iter"});
    p.solver_tol = get_number(so, "solver", "tol", p.solver_tol);
    p.solver_max_iter = get_int(so, "solver", "max_iter", p.solver_max_iter);
  }
  if (root.contains("picard")) {
    const auto& pi = root.at("picard");
    if (!pi.is_object()) fail("picard", "expected an object");
    reject_unknown(pi, "picard", {"theta", "tol", "max_iter"});
    p.picard.theta = get_number(pi, "picard", "theta", p.picard.theta);
    p.picard.tol = get_number(pi, "picard", "tol", p.picard.tol);
    p.picard.max_iter = get_int(pi, "picard", "max_iter", p.picard.max_iter);
  }
  if (root.contains("study")) {
    const auto& st = root.at("study");
    if (!st.is_object()) fail("study", "expected an object");
    reject_unknown(st, "study", {"eps_list", "M", "K"});
    if (st.contains("eps_list")) {
      const auto& el = st.at("eps_list");
      if (!el.is_array() || el.empty()) {
        fail("study.eps_list", "expected a non-empty array");
      }
      cfg.eps_list.clear();
      for (const auto& v : el) cfg.eps_list.push_back(v.get<double>());
    }
    cfg.M = get_int(st, "study", "M", cfg.M);
    cfg.K = get_int(st, "study", "K", cfg.K);
  }
  p.allow_positive_a =
      get_bool(root, "config", "allow_positive_a", p.allow_positive_a);

  cfg.validate();
  return cfg;
}

StudyConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const StudyConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  json root;
  root["species"] = p.N;
  json co;
  for (const auto& s : p.d) co["d"].push_back(coefficient_to_json(s));
  for (const auto& s : p.a) co["a"].push_back(coefficient_to_json(s));
  for (const auto& s : p.b) co["b"].push_back(coefficient_to_json(s));
  root["coefficients"] = co;
  json re;
  for (const auto& r : p.reactions.volume) {
    re["volume"].push_back(volume_reaction_to_json(r));
  }
  for (const auto& r : p.reactions.surface) {
    re["surface"].push_back(
        json{{"kind", r.kind == SurfaceKind::LINEAR ? "LINEAR" : "SATURATING"}});
  }
  root["reactions"] = re;
  for (const auto& s : p.sources) root["sources"].push_back(source_to_json(s));
  root["geometry"] = {
      {"hole_center", {p.geometry.hole_center.x, p.geometry.hole_center.y}},
      {"hole_radius", p.geometry.hole_radius}};
  root["discretization"] = {{"cell_h", p.cell_h}, {"macro_h", p.macro_h}};
  root["solver"] = {{"tol", p.solver_tol}, {"max_iter", p.solver_max_iter}};
  root["picard"] = {{"theta", p.picard.theta},
                    {"tol", p.picard.tol},
                    {"max_iter", p.picard.max_iter}};
  root["study"] = {{"eps_list", cfg.eps_list}, {"M", cfg.M}, {"K", cfg.K}};
  root["allow_positive_a"] = p.allow_positive_a;
  return root.dump(2) + "\n";
}

}  // namespace homog
