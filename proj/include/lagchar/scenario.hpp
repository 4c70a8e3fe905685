#pragma once

// Scenario files: what to simulate and which checks to run on it.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lagchar/characteristics.hpp"
#include "lagchar/flux_formula.hpp"
#include "lagchar/toml.hpp"

namespace lagchar {

using json = nlohmann::json;

// Every physical default and every pass/fail tolerance in one place; a
// [defaults] table in the config overrides any of them by name.
struct Defaults {
  double horizon = 1.0;
  double mesh = kDefaultMesh;
  int nx = 256;
  int nv = 256;
  std::uint64_t seed = 1;
  int levels = kDefaultLevels;
  int cells = 32;
  double snap_cells = 0.25;  // trace snap radius in units of dx

  int weak_tests = 10;
  double weak_tol = 1e-6;
  double dissipation_rel_tol = 0.03;
  double dissipation_abs_tol = 1e-3;
  double pushforward_factor = 2.0;  // times (dx + dv) per unit perimeter
  int pushforward_rects = 8;        // per side
  std::vector<double> pushforward_times{0.0, 0.5, 1.0};  // fractions of T
  std::size_t crossing_pairs = 10000;
  double crossing_slack = 1e-10;
  double flux_rel_tol = 0.02;
  double flux_abs_tol = 1e-3;
  double mollify_delta = 1e-3;
  double mollify_tol = 1e-2;
  double theta_psi_tol = 1e-12;
  std::vector<double> tangency_eps{0.1, 0.05, 0.025, 0.0125};
  double tangency_r2 = 0.9;
  double char_violation_frac = 0.05;
};

struct SurfaceSpec {
  std::string name;
  std::vector<double> ts;
  std::vector<double> xs;
  std::optional<int> front;  // follow this front's path on [ts[0], ts[1]]
  PlateauBump phi_t;
  PlateauBump phi_x{-1e6, 1e6, 0.0};
  double mollify = 0.0;
};

struct EntropyRequest {
  EntropySpec spec;
  Anchor anchor = Anchor::ZeroAtZero;
  std::string name;
};

struct CharacteristicRequest {
  std::vector<double> x0;
  double t0 = 0.0;
  int levels = kDefaultLevels;
};

struct ConvergeRequest {
  std::vector<int> grids{64, 128, 256};
  std::vector<double> meshes;
  std::optional<std::pair<double, double>> probe;  // (t, x) for trace errors
};

struct Scenario {
  std::string name;
  json flux_spec;
  FluxModel flux = FluxModel::burgers();
  InitialData initial;
  InteractionMode interaction = InteractionMode::Entropic;
  GridSpec grid;
  unsigned threads = 1;
  std::vector<SurfaceSpec> surfaces;
  std::vector<EntropyRequest> entropies;
  std::optional<CharacteristicRequest> characteristic;
  ConvergeRequest converge;
  std::string out_dir;
  Defaults defaults;
  json source;  // parsed config, echoed into the report

  double horizon() const { return defaults.horizon; }
  double mesh() const { return defaults.mesh; }
};

namespace config_detail {

class Reader {
 public:
  explicit Reader(const toml::Document& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& what) const {
    throw ConfigError(what + " (at " + (ptr.empty() ? "/" : ptr) + ")", doc_.line_of(ptr));
  }

  const json* find(const std::string& ptr) const {
    const json::json_pointer p(ptr);
    return doc_.root.contains(p) ? &doc_.root.at(p) : nullptr;
  }

  double number(const std::string& ptr, double fallback) const {
    const json* v = find(ptr);
    if (!v) return fallback;
    if (!v->is_number()) fail(ptr, "expected a number");
    return v->get<double>();
  }
  double number(const std::string& ptr) const {
    if (!find(ptr)) fail(ptr, "missing required number");
    return number(ptr, 0.0);
  }
  long long integer(const std::string& ptr, long long fallback) const {
    const json* v = find(ptr);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(ptr, "expected an integer");
    return v->get<long long>();
  }
  std::string string(const std::string& ptr, const std::string& fallback) const {
    const json* v = find(ptr);
    if (!v) return fallback;
    if (!v->is_string()) fail(ptr, "expected a string");
    return v->get<std::string>();
  }
  std::vector<double> numbers(const std::string& ptr,
                              std::vector<double> fallback) const {
    const json* v = find(ptr);
    if (!v) return fallback;
    if (!v->is_array()) fail(ptr, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) fail(ptr + "/" + std::to_string(i), "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }
  std::size_t count(const std::string& ptr) const {
    const json* v = find(ptr);
    if (!v) return 0;
    if (!v->is_array()) fail(ptr, "expected an array");
    return v->size();
  }
  void only_keys(const std::string& ptr, std::initializer_list<const char*> keys) const {
    const json* v = find(ptr);
    if (!v) return;
    if (!v->is_object()) fail(ptr, "expected a table");
    for (const auto& [k, _] : v->items()) {
      bool known = false;
      for (const char* a : keys) known = known || k == a;
      if (!known) fail(ptr + "/" + k, "unknown key '" + k + "'");
    }
  }

 private:
  const toml::Document& doc_;
};

inline void read_defaults(const Reader& r, Defaults& d) {
  r.only_keys("/defaults",
              {"horizon", "mesh", "nx", "nv", "seed", "levels", "cells", "snap_cells",
               "weak_tests", "weak_tol", "dissipation_rel_tol", "dissipation_abs_tol",
               "pushforward_factor", "pushforward_rects", "pushforward_times",
               "crossing_pairs", "crossing_slack", "flux_rel_tol", "flux_abs_tol",
               "mollify_delta", "mollify_tol", "theta_psi_tol", "tangency_eps",
               "tangency_r2", "char_violation_frac"});
  const std::string p = "/defaults/";
  d.horizon = r.number(p + "horizon", d.horizon);
  d.mesh = r.number(p + "mesh", d.mesh);
  d.nx = static_cast<int>(r.integer(p + "nx", d.nx));
  d.nv = static_cast<int>(r.integer(p + "nv", d.nv));
  d.seed = static_cast<std::uint64_t>(r.integer(p + "seed", static_cast<long long>(d.seed)));
  d.levels = static_cast<int>(r.integer(p + "levels", d.levels));
  d.cells = static_cast<int>(r.integer(p + "cells", d.cells));
  d.snap_cells = r.number(p + "snap_cells", d.snap_cells);
  d.weak_tests = static_cast<int>(r.integer(p + "weak_tests", d.weak_tests));
  d.weak_tol = r.number(p + "weak_tol", d.weak_tol);
  d.dissipation_rel_tol = r.number(p + "dissipation_rel_tol", d.dissipation_rel_tol);
  d.dissipation_abs_tol = r.number(p + "dissipation_abs_tol", d.dissipation_abs_tol);
  d.pushforward_factor = r.number(p + "pushforward_factor", d.pushforward_factor);
  d.pushforward_rects = static_cast<int>(r.integer(p + "pushforward_rects", d.pushforward_rects));
  d.pushforward_times = r.numbers(p + "pushforward_times", d.pushforward_times);
  d.crossing_pairs = static_cast<std::size_t>(
      r.integer(p + "crossing_pairs", static_cast<long long>(d.crossing_pairs)));
  d.crossing_slack = r.number(p + "crossing_slack", d.crossing_slack);
  d.flux_rel_tol = r.number(p + "flux_rel_tol", d.flux_rel_tol);
  d.flux_abs_tol = r.number(p + "flux_abs_tol", d.flux_abs_tol);
  d.mollify_delta = r.number(p + "mollify_delta", d.mollify_delta);
  d.mollify_tol = r.number(p + "mollify_tol", d.mollify_tol);
  d.theta_psi_tol = r.number(p + "theta_psi_tol", d.theta_psi_tol);
  d.tangency_eps = r.numbers(p + "tangency_eps", d.tangency_eps);
  d.tangency_r2 = r.number(p + "tangency_r2", d.tangency_r2);
  d.char_violation_frac = r.number(p + "char_violation_frac", d.char_violation_frac);

  if (!(d.horizon > 0.0)) r.fail(p + "horizon", "horizon must be positive");
  if (!(d.mesh > 0.0 && d.mesh <= 1.0)) r.fail(p + "mesh", "mesh must lie in (0, 1]");
  if (d.nx < 1 || d.nv < 1) r.fail(p + "nx", "grid sizes must be positive");
  if (d.levels < 1) r.fail(p + "levels", "need at least one dyadic level");
  if (d.cells < 1) r.fail(p + "cells", "need at least one verification cell");
  if (d.weak_tests < 0) r.fail(p + "weak_tests", "weak_tests must be >= 0");
  if (d.pushforward_rects < 1) r.fail(p + "pushforward_rects", "need at least one rectangle");
  if (d.tangency_eps.size() < 2) r.fail(p + "tangency_eps", "need at least two epsilons");
}

inline FluxModel read_flux(const Reader& r, json& echo) {
  if (!r.find("/flux")) r.fail("/flux", "missing [flux] table");
  r.only_keys("/flux", {"kind", "coeffs", "name"});
  const std::string kind = r.string("/flux/kind", "polynomial");
  echo = *r.find("/flux");
  try {
    if (kind == "burgers") return FluxModel::burgers();
    if (kind == "polynomial") {
      if (!r.find("/flux/coeffs")) r.fail("/flux/coeffs", "polynomial flux needs coeffs");
      return FluxModel::polynomial(r.numbers("/flux/coeffs", {}),
                                   r.string("/flux/name", "polynomial"));
    }
  } catch (const DomainError& e) {
    r.fail("/flux/coeffs", std::string("invalid flux: ") + e.what());
  }
  r.fail("/flux/kind", "unknown flux kind '" + kind + "' (burgers | polynomial)");
}

inline JumpMode read_mode(const Reader& r, const std::string& ptr) {
  const std::string m = r.string(ptr, "entropic");
  if (m == "entropic") return JumpMode::Entropic;
  if (m == "non_entropic" || m == "nonentropic") return JumpMode::NonEntropic;
  r.fail(ptr, "jump mode must be 'entropic' or 'non_entropic'");
}

inline Anchor read_anchor(const Reader& r, const std::string& ptr, Anchor fallback) {
  const std::string a = r.string(ptr, fallback == Anchor::ZeroAtZero ? "zero_at_zero" : "zero_at_one");
  if (a == "zero_at_zero") return Anchor::ZeroAtZero;
  if (a == "zero_at_one") return Anchor::ZeroAtOne;
  r.fail(ptr, "anchor must be 'zero_at_zero' or 'zero_at_one'");
}

inline PlateauBump read_plateau(const Reader& r, const std::string& ptr,
                                PlateauBump fallback) {
  if (!r.find(ptr)) return fallback;
  const auto v = r.numbers(ptr, {});
  if (v.size() != 2 && v.size() != 3) r.fail(ptr, "plateau is [lo, hi] or [lo, hi, ramp]");
  try {
    return PlateauBump(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
  } catch (const DomainError& e) {
    r.fail(ptr, e.what());
  }
}

}  // namespace config_detail

inline Scenario load_scenario(const toml::Document& doc) {
  using config_detail::Reader;
  const Reader r(doc);
  r.only_keys("", {"name", "out", "threads", "horizon", "mesh", "interaction", "defaults",
                   "flux", "initial",
                   "grid", "surface", "entropy", "characteristic", "converge"});
  Scenario sc;
  sc.source = doc.root;
  sc.name = r.string("/name", "scenario");
  sc.out_dir = r.string("/out", "out/" + sc.name);
  const long long threads = r.integer("/threads", 1);
  if (threads < 1) r.fail("/threads", "threads must be >= 1");
  sc.threads = static_cast<unsigned>(threads);
  config_detail::read_defaults(r, sc.defaults);
  sc.defaults.horizon = r.number("/horizon", sc.defaults.horizon);
  sc.defaults.mesh = r.number("/mesh", sc.defaults.mesh);
  if (!(sc.defaults.horizon > 0.0)) r.fail("/horizon", "horizon must be positive");
  if (!(sc.defaults.mesh > 0.0 && sc.defaults.mesh <= 1.0)) r.fail("/mesh", "mesh must lie in (0, 1]");
  const Defaults& d = sc.defaults;

  sc.flux = config_detail::read_flux(r, sc.flux_spec);

  const std::string inter = r.string("/interaction", "entropic");
  if (inter == "entropic") {
    sc.interaction = InteractionMode::Entropic;
  } else if (inter == "preserve") {
    sc.interaction = InteractionMode::Preserve;
  } else {
    r.fail("/interaction", "interaction must be 'entropic' or 'preserve'");
  }

  if (!r.find("/initial")) r.fail("/initial", "missing [initial] table");
  r.only_keys("/initial", {"left", "jumps"});
  sc.initial.left = r.number("/initial/left");
  for (std::size_t i = 0; i < r.count("/initial/jumps"); ++i) {
    const std::string p = "/initial/jumps/" + std::to_string(i);
    r.only_keys(p, {"x", "u", "mode"});
    sc.initial.jumps.push_back({r.number(p + "/x"), r.number(p + "/u"),
                                config_detail::read_mode(r, p + "/mode")});
  }
  try {
    sc.initial.validate();
  } catch (const DomainError& e) {
    r.fail("/initial", e.what());
  }

  // Default window: the initial support padded by the maximal speed times
  // T, so no curve can leave it.
  r.only_keys("/grid", {"nx", "nv", "x_lo", "x_hi", "seed"});
  const double reach = sc.flux.s_max() * d.horizon;
  const double pad = 0.5;
  sc.grid.nx = static_cast<int>(r.integer("/grid/nx", d.nx));
  sc.grid.nv = static_cast<int>(r.integer("/grid/nv", d.nv));
  sc.grid.x_lo = r.number("/grid/x_lo", sc.initial.support_min() - reach - pad);
  sc.grid.x_hi = r.number("/grid/x_hi", sc.initial.support_max() + reach + pad);
  sc.grid.seed = static_cast<std::uint64_t>(r.integer("/grid/seed", static_cast<long long>(d.seed)));
  if (sc.grid.nx < 1 || sc.grid.nv < 1) r.fail("/grid", "grid sizes must be positive");
  if (!(sc.grid.x_hi > sc.grid.x_lo)) r.fail("/grid", "need x_lo < x_hi");

  for (std::size_t i = 0; i < r.count("/surface"); ++i) {
    const std::string p = "/surface/" + std::to_string(i);
    r.only_keys(p, {"name", "t", "x", "front", "phi_t", "phi_x", "mollify"});
    SurfaceSpec s;
    s.name = r.string(p + "/name", "surface" + std::to_string(i));
    s.ts = r.numbers(p + "/t", {});
    if (s.ts.size() < 2) r.fail(p + "/t", "surface needs at least two times");
    for (std::size_t k = 1; k < s.ts.size(); ++k) {
      if (!(s.ts[k] > s.ts[k - 1])) r.fail(p + "/t", "surface times must increase");
    }
    if (!(s.ts.front() > 0.0 && s.ts.back() < d.horizon)) {
      r.fail(p + "/t", "surface must lie inside (0, T)");
    }
    if (r.find(p + "/front")) {
      if (r.find(p + "/x")) r.fail(p, "give either x or front, not both");
      if (s.ts.size() != 2) r.fail(p + "/t", "a front surface takes t = [t_a, t_b]");
      s.front = static_cast<int>(r.integer(p + "/front", 0));
    } else {
      s.xs = r.numbers(p + "/x", {});
      if (s.xs.size() != s.ts.size()) r.fail(p + "/x", "x and t must have the same length");
    }
    s.phi_t = config_detail::read_plateau(r, p + "/phi_t",
                                          PlateauBump(s.ts.front(), s.ts.back(), 0.0));
    s.phi_x = config_detail::read_plateau(r, p + "/phi_x", s.phi_x);
    s.mollify = r.number(p + "/mollify", d.mollify_delta);
    sc.surfaces.push_back(s);
  }

  for (std::size_t i = 0; i < r.count("/entropy"); ++i) {
    const std::string p = "/entropy/" + std::to_string(i);
    r.only_keys(p, {"kind", "a", "anchor"});
    EntropyRequest e;
    const std::string kind = r.string(p + "/kind", "quadratic");
    if (kind == "quadratic") {
      e.spec.kind = EntropyKind::Quadratic;
    } else if (kind == "kruzkov") {
      e.spec.kind = EntropyKind::KruzkovUpper;
    } else if (kind == "kruzkov_lower") {
      e.spec.kind = EntropyKind::KruzkovLower;
    } else {
      r.fail(p + "/kind", "entropy kind must be quadratic | kruzkov | kruzkov_lower");
    }
    e.spec.a = r.number(p + "/a", 0.5);
    if (!(e.spec.a >= 0.0 && e.spec.a <= 1.0)) r.fail(p + "/a", "a must lie in [0, 1]");
    e.anchor = config_detail::read_anchor(r, p + "/anchor", Anchor::ZeroAtZero);
    e.name = kind + (kind == "quadratic" ? "" : "(" + json(e.spec.a).dump() + ")") + "/" +
             to_string(e.anchor);
    sc.entropies.push_back(e);
  }
  if (sc.entropies.empty()) {
    sc.entropies.push_back({EntropySpec{EntropyKind::Quadratic, 0.0, {}, {}},
                            Anchor::ZeroAtZero, "quadratic/" + std::string(to_string(Anchor::ZeroAtZero))});
    sc.entropies.push_back({EntropySpec{EntropyKind::Quadratic, 0.0, {}, {}},
                            Anchor::ZeroAtOne, "quadratic/" + std::string(to_string(Anchor::ZeroAtOne))});
  }

  if (r.find("/characteristic")) {
    r.only_keys("/characteristic", {"x0", "t0", "levels"});
    CharacteristicRequest c;
    if (r.find("/characteristic/x0") && r.find("/characteristic/x0")->is_number()) {
      c.x0 = {r.number("/characteristic/x0")};
    } else {
      c.x0 = r.numbers("/characteristic/x0", {});
    }
    if (c.x0.empty()) r.fail("/characteristic/x0", "need at least one starting point");
    c.t0 = r.number("/characteristic/t0", 0.0);
    if (!(c.t0 >= 0.0 && c.t0 < d.horizon)) r.fail("/characteristic/t0", "t0 must lie in [0, T)");
    c.levels = static_cast<int>(r.integer("/characteristic/levels", d.levels));
    if (c.levels < 1) r.fail("/characteristic/levels", "need at least one level");
    sc.characteristic = c;
  }
  if (r.find("/converge")) {
    r.only_keys("/converge", {"grids", "meshes", "probe"});
    if (r.find("/converge/grids")) {
      sc.converge.grids.clear();
      for (double g : r.numbers("/converge/grids", {})) {
        if (!(g >= 1.0) || g != std::floor(g)) r.fail("/converge/grids", "grid sizes must be positive integers");
        sc.converge.grids.push_back(static_cast<int>(g));
      }
    }
    sc.converge.meshes = r.numbers("/converge/meshes", {});
    for (double m : sc.converge.meshes) {
      if (!(m > 0.0 && m <= 1.0)) r.fail("/converge/meshes", "meshes must lie in (0, 1]");
    }
    if (r.find("/converge/probe")) {
      const auto pr = r.numbers("/converge/probe", {});
      if (pr.size() != 2) r.fail("/converge/probe", "probe is [t, x]");
      sc.converge.probe = std::pair{pr[0], pr[1]};
    }
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  return load_scenario(toml::parse_file(path));
}

inline Scenario load_scenario_text(const std::string& text) {
  return load_scenario(toml::parse(text));
}

}  // namespace lagchar
