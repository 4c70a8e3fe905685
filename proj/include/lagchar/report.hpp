#pragma once

// Runs the checks a scenario asks for and collects metrics and CSV tables
// into a ReportBundle; also the grid/mesh convergence study.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lagchar/scenario.hpp"

namespace lagchar {

struct Metric {
  std::string check;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=", ">=", "==" or "info"
  bool pass = true;
};

struct Table {
  std::string file;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write(const std::filesystem::path& dir) const {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / file).string());
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
  }
};

// Shortest round-trip decimal, so CSV bytes depend only on the values.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

struct ReportBundle {
  std::string scenario;
  json config;
  std::vector<Metric> metrics;
  std::vector<Table> tables;
  std::vector<std::string> log;

  Metric& add(const std::string& check, const std::string& name, double value,
              double tol, const std::string& rel) {
    Metric m{check, name, value, tol, rel, true};
    if (rel == "<=") m.pass = value <= tol;
    if (rel == ">=") m.pass = value >= tol;
    if (rel == "==") m.pass = value == tol;
    if (std::isnan(value) && rel != "info") m.pass = false;
    metrics.push_back(m);
    return metrics.back();
  }
  void info(const std::string& check, const std::string& name, double value) {
    metrics.push_back({check, name, value, 0.0, "info", true});
  }

  bool passed() const {
    for (const auto& m : metrics) {
      if (!m.pass) return false;
    }
    return true;
  }

  std::vector<const Metric*> failures() const {
    std::vector<const Metric*> out;
    for (const auto& m : metrics) {
      if (!m.pass) out.push_back(&m);
    }
    return out;
  }

  json summary() const {
    json ms = json::array();
    for (const auto& m : metrics) {
      json j{{"check", m.check}, {"name", m.name}, {"relation", m.relation}, {"pass", m.pass}};
      j["value"] = std::isfinite(m.value) ? json(m.value) : json(num(m.value));
      if (m.relation != "info") j["tolerance"] = m.tolerance;
      ms.push_back(j);
    }
    json files = json::array();
    for (const auto& t : tables) files.push_back(t.file);
    return json{{"scenario", scenario},
                {"pass", passed()},
                {"metrics", ms},
                {"tables", files},
                {"log", log},
                {"config", config},
                {"tool", {{"name", "lagchar"}, {"version", "1.0.0"}}}};
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& t : tables) t.write(dir);
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "summary.json").string());
    out << summary().dump(2) << "\n";
  }
};

struct Ensembles {
  Ensemble hyp;
  Ensemble epi;
};

inline FrontSolution simulate(const Scenario& sc) {
  return evolve(sc.flux, sc.initial, sc.horizon(), sc.mesh(), sc.interaction);
}

inline Ensembles build_ensembles(const Scenario& sc, const FrontSolution& sol) {
  GridSpec epi_grid = sc.grid;
  epi_grid.seed = sc.grid.seed + 1;
  return {build_ensemble(sol, Side::Hypograph, sc.grid, sc.threads),
          build_ensemble(sol, Side::Epigraph, epi_grid, sc.threads)};
}

inline double quadratic_dissipation_oracle(const FrontSolution& sol) {
  const auto quad = make_quadratic(sol.flux, Anchor::ZeroAtZero);
  double total = 0.0;
  for (const auto& f : sol.fronts) {
    for (const auto& seg : f.segments) {
      total += std::abs(segment_dissipation_rate(seg, quad)) * (seg.t_end - seg.t_start);
    }
  }
  return total;
}

/// Bumps with random plateaus and ramps inside (0, T) x (support +- 1).
inline std::vector<TestFunction> random_bumps(const FrontSolution& sol, int n,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return numerics::unit_uniform(rng); };
  const double T = sol.horizon;
  const double xa = sol.initial.support_min() - 1.0;
  const double xb = sol.initial.support_max() + 1.0;
  std::vector<TestFunction> out;
  for (int i = 0; i < n; ++i) {
    const double rt = T * (0.02 + 0.08 * u());
    const double t0 = rt + T * 0.6 * u();
    const double t1 = t0 + T * 0.25 * u();
    const double rx = 0.05 + 0.25 * u();
    const double x0 = xa + (xb - xa) * u();
    const double x1 = x0 + u();
    out.push_back(TestFunction{PlateauBump(t0, t1, rt), PlateauBump(x0, x1, rx)});
  }
  return out;
}

inline void check_solution(const Scenario& sc, const FrontSolution& sol,
                           ReportBundle& b) {
  const Defaults& d = sc.defaults;
  double worst = 0.0;
  for (const auto& phi : random_bumps(sol, d.weak_tests, sc.grid.seed)) {
    worst = std::max(worst, std::abs(weak_form_residual(sol, phi)));
  }
  b.add("weak_residual", "max_abs_residual", worst, d.weak_tol, "<=");
  const Window all{0.0, sol.horizon};
  b.info("entropy_production", "mu_quadratic",
         entropy_production(sol, make_quadratic(sol.flux, Anchor::ZeroAtZero), all));
  b.info("entropy_production", "nu_quadratic", quadratic_dissipation_oracle(sol));
  b.info("front_tracking", "fronts", static_cast<double>(sol.fronts.size()));
  b.info("front_tracking", "segments", static_cast<double>(sol.segment_count()));
  b.info("front_tracking", "interactions", static_cast<double>(sol.events.size()));
  for (const auto& line : sol.log) b.log.push_back(line);

  Table fronts{"fronts.csv",
               {"front_id", "t_start[time]", "t_end[time]", "x_start[length]",
                "speed[length/time]", "u_left[state]", "u_right[state]", "kind"},
               {}};
  for (const auto& f : sol.fronts) {
    for (const auto& s : f.segments) {
      fronts.rows.push_back({num(f.id), num(s.t_start), num(s.t_end), num(s.x_start),
                             num(s.speed), num(s.u_left), num(s.u_right), to_string(s.kind)});
    }
  }
  b.tables.push_back(std::move(fronts));

  Table events{"events.csv", {"t[time]", "x[length]", "incoming", "outgoing", "tie"}, {}};
  auto ids = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
  };
  for (const auto& e : sol.events) {
    events.rows.push_back({num(e.t), num(e.x), ids(e.incoming), ids(e.outgoing),
                           e.tie ? "1" : "0"});
  }
  b.tables.push_back(std::move(events));
}

// Rectangles tile the part of the window that no curve from outside it can
// reach by time t.
inline double pushforward_per_perimeter(const Ensemble& ens, const FrontSolution& sol,
                                        double t, int rects) {
  const double reach = sol.flux.s_max() * t;
  const double lo = ens.grid.x_lo + reach;
  const double hi = ens.grid.x_hi - reach;
  if (!(hi > lo)) throw WindowError("x window leaves no room for pushforward rectangles");
  const auto rs = dyadic_rectangles(lo, hi, rects);
  const auto disc = pushforward_check(ens, sol, t, rs);
  double worst = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    worst = std::max(worst, disc[i] / rs[i].perimeter());
  }
  return worst;
}

inline void check_lagrangian(const Scenario& sc, const FrontSolution& sol,
                             const Ensembles& ens, ReportBundle& b) {
  const Defaults& d = sc.defaults;
  const double bound = d.pushforward_factor * (ens.hyp.dx() + ens.hyp.dv());
  for (const Ensemble* e : {&ens.hyp, &ens.epi}) {
    for (double frac : d.pushforward_times) {
      const double t = frac * sol.horizon;
      b.add("pushforward", std::string(to_string(e->side)) + "@t=" + num(t),
            pushforward_per_perimeter(*e, sol, t, d.pushforward_rects), bound, "<=");
    }
  }

  const double tv = tv_dissipation(ens.hyp, Window{0.0, sol.horizon});
  const double oracle = quadratic_dissipation_oracle(sol);
  b.info("dissipation_identity", "tv_levels", tv);
  b.info("dissipation_identity", "oracle", oracle);
  b.add("dissipation_identity", "abs_error", std::abs(tv - oracle),
        d.dissipation_rel_tol * oracle + d.dissipation_abs_tol, "<=");

  const auto nc = check_no_crossing(ens.hyp, ens.epi, sol.flux.s_max() * sol.horizon,
                                    d.crossing_pairs, sc.grid.seed, d.crossing_slack);
  b.info("no_crossing", "pairs_checked", static_cast<double>(nc.pairs_checked));
  b.add("no_crossing", "violations", static_cast<double>(nc.violations), 0.0, "==");

  const auto jc = count_jumps(ens.hyp);
  b.info("ensemble", "hypograph_curves", static_cast<double>(ens.hyp.curves.size()));
  b.info("ensemble", "epigraph_curves", static_cast<double>(ens.epi.curves.size()));
  b.info("ensemble", "bounce_left", static_cast<double>(jc.bounce_left));
  b.info("ensemble", "bounce_right", static_cast<double>(jc.bounce_right));

  for (const Ensemble* e : {&ens.hyp, &ens.epi}) {
    Table t{std::string("ensemble_") + to_string(e->side) + ".csv",
            {"curve_id", "x0[length]", "v0[state]", "weight[length*state]", "jumps",
             "level_tv[state]", "x_T[length]", "v_T[state]"},
            {}};
    for (const auto& c : e->curves) {
      t.rows.push_back({num(c.id), num(c.x0()), num(c.v0()), num(c.weight),
                        num(c.jumps.size()), num(c.total_variation()),
                        num(c.xs.back()), num(c.vs.back())});
    }
    b.tables.push_back(std::move(t));
  }
}

inline Surface resolve_surface(const SurfaceSpec& s, const FrontSolution& sol) {
  if (!s.front) return Surface(PolyLine(s.ts, s.xs));
  const int id = *s.front;
  const Front* f = nullptr;
  for (const auto& fr : sol.fronts) {
    if (fr.id == id) f = &fr;
  }
  const double ta = s.ts.front();
  const double tb = s.ts.back();
  if (!f) throw ConfigError("surface '" + s.name + "': no front with id " + std::to_string(id));
  if (f->birth() > ta || f->death() < tb) {
    throw ConfigError("surface '" + s.name + "': front " + std::to_string(id) +
                      " does not exist on the whole time span");
  }
  const PolyLine p = f->path();
  PolyLine out;
  out.append(ta, p(ta));
  for (std::size_t i = 0; i < p.ts.size(); ++i) {
    if (p.ts[i] > ta && p.ts[i] < tb) out.append(p.ts[i], p.xs[i]);
  }
  out.append(tb, p(tb));
  return Surface(out);
}

inline void check_fluxes(const Scenario& sc, const FrontSolution& sol,
                         const Ensembles& ens, ReportBundle& b) {
  const Defaults& d = sc.defaults;
  Table t{"flux_checks.csv",
          {"surface", "entropy", "trace_flux[entropy]", "lagrangian_flux[entropy]",
           "abs_gap[entropy]", "mollified_flux[entropy]", "iplus[entropy]",
           "iminus[entropy]", "bminus[entropy]", "theta_psi_max_diff[entropy]"},
          {}};
  for (const auto& spec : sc.surfaces) {
    const Surface sigma = resolve_surface(spec, sol);
    const TestFunction phi{spec.phi_t, spec.phi_x};

    const auto st = intersection_statistics(ens.hyp, sigma, d.tangency_eps, sc.threads);
    const double bound = static_cast<double>(sol.segment_count() + sigma.s.ts.size() + 1);
    b.add("intersections", spec.name + ":max_count", static_cast<double>(st.max_count), bound, "<=");
    bool mass_everywhere = true;
    for (double m : st.tangency_mass) mass_everywhere = mass_everywhere && m > 0.0;
    if (mass_everywhere) {
      b.add("intersections", spec.name + ":tangency_r2", st.r_squared, d.tangency_r2, ">=");
    } else {
      b.info("intersections", spec.name + ":tangency_r2", st.r_squared);
    }
    b.info("intersections", spec.name + ":tangency_c", st.fitted_c);

    for (const auto& req : sc.entropies) {
      const auto pair = make_entropy(req.spec, sol.flux, req.anchor);
      const Ensemble& e = req.anchor == Anchor::ZeroAtZero ? ens.hyp : ens.epi;
      const std::string tag = spec.name + ":" + req.name;
      const double tr = trace_flux(sol, sigma, pair, phi);
      const auto lag = lagrangian_flux(e, sigma, pair, phi, sc.threads);
      const double gap = std::abs(lag.total - tr);
      if (std::abs(tr) > d.flux_abs_tol) {
        b.add("flux_formula", tag + ":rel_error", gap / std::abs(tr), d.flux_rel_tol, "<=");
      } else {
        b.add("flux_formula", tag + ":abs_error", gap, d.flux_abs_tol, "<=");
      }
      b.info("flux_formula", tag + ":trace", tr);
      b.info("flux_formula", tag + ":lagrangian", lag.total);

      double moll = std::numeric_limits<double>::quiet_NaN();
      try {
        moll = mollified_flux(sol, sigma, pair, phi, spec.mollify);
        b.add("mollified", tag + ":abs_error", std::abs(moll - tr), d.mollify_tol, "<=");
      } catch (const DomainError& ex) {
        b.log.push_back("mollified flux skipped for " + tag + ": " + ex.what());
      }

      const auto diffs = numerics::parallel_map<double>(
          e.curves.size(), sc.threads, [&](std::size_t i) {
            const auto& c = e.curves[i];
            return std::abs(curve_flux_pairing(classify_intersections(c, sigma).records, pair, phi) -
                            theta_psi_pairing(c, sigma, pair, phi));
          });
      double worst = 0.0;
      for (double v : diffs) worst = std::max(worst, v);
      b.add("theta_psi", tag + ":max_diff", worst, d.theta_psi_tol, "<=");

      t.rows.push_back({spec.name, req.name, num(tr), num(lag.total), num(gap), num(moll),
                        num(lag.iplus), num(lag.iminus), num(lag.bminus), num(worst)});
    }
  }
  b.tables.push_back(std::move(t));
}

struct CharacteristicResult {
  Characteristic ch;
  VerifyReport report;
  std::size_t left_violations = 0;
  std::size_t right_violations = 0;
};

inline CharacteristicResult run_characteristic(const Scenario& sc, const FrontSolution& sol,
                                               const Ensembles& ens, double x0, double t0,
                                               int levels) {
  const Defaults& d = sc.defaults;
  CharacteristicResult r;
  r.ch = refine_barrier(ens.hyp, sol.flux, x0, levels, t0, sol.horizon);
  r.report = verify_characteristic(r.ch, sol, default_speed_tol(ens.hyp, sol.mesh, sol.flux),
                                   d.snap_cells * ens.hyp.dx(), d.cells, &ens.hyp);
  r.left_violations = check_left_barrier(r.ch, ens.hyp, d.crossing_slack);
  r.right_violations = check_right_barrier(r.ch, ens.epi, d.crossing_slack);
  return r;
}

inline void check_characteristics(const Scenario& sc, const FrontSolution& sol,
                                  const Ensembles& ens, const CharacteristicRequest& req,
                                  ReportBundle& b) {
  const Defaults& d = sc.defaults;
  for (std::size_t k = 0; k < req.x0.size(); ++k) {
    const auto r = run_characteristic(sc, sol, ens, req.x0[k], req.t0, req.levels);
    const std::string tag = "x0=" + num(req.x0[k]);
    b.add("characteristic", tag + ":violating_fraction", r.report.violating_fraction(),
          d.char_violation_frac, "<=");
    b.add("characteristic", tag + ":left_barrier_violations",
          static_cast<double>(r.left_violations), 0.0, "==");
    b.add("characteristic", tag + ":right_barrier_violations",
          static_cast<double>(r.right_violations), 0.0, "==");
    b.add("characteristic", tag + ":lipschitz", r.ch.curve.lipschitz(),
          sol.flux.s_max() * (1.0 + 1e-12), "<=");
    double worst_drop = 0.0;
    for (double m : r.ch.level_min_increase) worst_drop = std::min(worst_drop, m);
    b.add("characteristic", tag + ":level_min_increase", worst_drop, -ens.hyp.dx(), ">=");
    b.info("characteristic", tag + ":x_end", r.ch.curve.xs.back());
    b.info("characteristic", tag + ":jump_cells", static_cast<double>(r.report.jump_cells));
    b.info("characteristic", tag + ":rh_within_2dv",
           r.report.jump_fraction_within(2 * ens.hyp.dv()));

    Table cells{"characteristic_" + std::to_string(k) + ".csv",
                {"t[time]", "x[length]", "u_minus[state]", "u_plus[state]",
                 "xprime[length/time]", "target_speed[length/time]", "violation_flag",
                 "nu_ratio[state]"},
                {}};
    for (const auto& c : r.report.cells) {
      cells.rows.push_back({num(c.t_mid()), num(c.x_mid), num(c.u_minus), num(c.u_plus),
                            num(c.xprime), num(c.target_speed), c.violation ? "1" : "0",
                            num(c.nu_ratio)});
    }
    b.tables.push_back(std::move(cells));
    Table path{"barrier_" + std::to_string(k) + ".csv", {"t[time]", "x[length]"}, {}};
    for (std::size_t i = 0; i < r.ch.curve.ts.size(); ++i) {
      path.rows.push_back({num(r.ch.curve.ts[i]), num(r.ch.curve.xs[i])});
    }
    b.tables.push_back(std::move(path));
  }
}

inline ReportBundle make_bundle(const Scenario& sc) {
  ReportBundle b;
  b.scenario = sc.name;
  b.config = sc.source;
  b.info("scenario", "seed", static_cast<double>(sc.grid.seed));
  return b;
}

/// Everything the scenario asks for.
inline ReportBundle run_scenario(const Scenario& sc) {
  ReportBundle b = make_bundle(sc);
  const FrontSolution sol = simulate(sc);
  check_solution(sc, sol, b);
  const Ensembles ens = build_ensembles(sc, sol);
  check_lagrangian(sc, sol, ens, b);
  check_fluxes(sc, sol, ens, b);
  if (sc.characteristic) check_characteristics(sc, sol, ens, *sc.characteristic, b);
  return b;
}

struct ConvergenceRow {
  int nx = 0;
  int nv = 0;
  double mesh = 0.0;
  double flux_gap = std::numeric_limits<double>::quiet_NaN();
  double speed_residual = std::numeric_limits<double>::quiet_NaN();
  double pushforward = std::numeric_limits<double>::quiet_NaN();
  double trace_error = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> grid_rows;
  std::vector<ConvergenceRow> mesh_rows;
  double flux_gap_rate = std::numeric_limits<double>::quiet_NaN();
  double speed_residual_rate = std::numeric_limits<double>::quiet_NaN();
  double pushforward_rate = std::numeric_limits<double>::quiet_NaN();
  double trace_error_rate = std::numeric_limits<double>::quiet_NaN();

  Table csv() const {
    Table t{"convergence.csv",
            {"study", "nx", "nv", "mesh[state]", "flux_gap[entropy]",
             "speed_residual[length/time]", "pushforward[per_length]", "trace_error[state]"},
            {}};
    for (const auto* rows : {&grid_rows, &mesh_rows}) {
      for (const auto& r : *rows) {
        t.rows.push_back({rows == &grid_rows ? "grid" : "mesh", num(r.nx), num(r.nv),
                          num(r.mesh), num(r.flux_gap), num(r.speed_residual),
                          num(r.pushforward), num(r.trace_error)});
      }
    }
    return t;
  }

  json rates() const {
    auto v = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return json{{"flux_gap", v(flux_gap_rate)},
                {"speed_residual", v(speed_residual_rate)},
                {"pushforward", v(pushforward_rate)},
                {"trace_error", v(trace_error_rate)}};
  }
};

/// Reruns the scenario on each grid (nx = nv = n) and, if meshes are given,
/// compares u at a probe point against a 16x finer rarefaction mesh.
/// Rates are log-log slopes of error against resolution (dx or mesh).
inline ConvergenceTable convergence_study(const Scenario& base, const ConvergeRequest& req) {
  if (req.grids.size() < 3 && req.meshes.size() < 3) {
    throw ConfigError("convergence study needs at least three grid or mesh levels");
  }
  ConvergenceTable out;
  std::vector<double> res;
  std::vector<double> gaps;
  std::vector<double> speeds;
  std::vector<double> pushes;
  if (req.grids.size() >= 3) {
    const FrontSolution sol = simulate(base);
    for (int n : req.grids) {
      Scenario sc = base;
      sc.grid.nx = n;
      sc.grid.nv = n;
      const Ensembles ens = build_ensembles(sc, sol);
      ConvergenceRow row;
      row.nx = n;
      row.nv = n;
      row.mesh = sol.mesh;
      if (!sc.surfaces.empty()) {
        const auto& spec = sc.surfaces.front();
        const auto& req_e = sc.entropies.front();
        const Surface sigma = resolve_surface(spec, sol);
        const TestFunction phi{spec.phi_t, spec.phi_x};
        const auto pair = make_entropy(req_e.spec, sol.flux, req_e.anchor);
        const Ensemble& e = req_e.anchor == Anchor::ZeroAtZero ? ens.hyp : ens.epi;
        row.flux_gap = std::abs(lagrangian_flux(e, sigma, pair, phi, sc.threads).total -
                                trace_flux(sol, sigma, pair, phi));
      }
      if (sc.characteristic) {
        const auto& c = *sc.characteristic;
        const auto r = run_characteristic(sc, sol, ens, c.x0.front(), c.t0, c.levels);
        double total = 0.0;
        for (const auto& cell : r.report.cells) total += cell.residual * cell.width();
        row.speed_residual = total / r.report.total_time;
      }
      row.pushforward = pushforward_per_perimeter(ens.hyp, sol, 0.5 * sol.horizon,
                                                  sc.defaults.pushforward_rects);
      out.grid_rows.push_back(row);
      res.push_back(ens.hyp.dx());
      gaps.push_back(row.flux_gap);
      speeds.push_back(row.speed_residual);
      pushes.push_back(row.pushforward);
    }
    out.flux_gap_rate = numerics::loglog_rate(res, gaps);
    out.speed_residual_rate = numerics::loglog_rate(res, speeds);
    out.pushforward_rate = numerics::loglog_rate(res, pushes);
  }
  if (req.meshes.size() >= 3) {
    double finest = req.meshes.front();
    for (double m : req.meshes) finest = std::min(finest, m);
    const double T = base.horizon();
    const auto [pt, px] = req.probe.value_or(std::pair{
        T, 0.5 * (base.initial.support_min() + base.initial.support_max()) + 0.25 * T});
    const FrontSolution ref = evolve(base.flux, base.initial, T, finest / 16, base.interaction);
    std::vector<double> ms;
    std::vector<double> errs;
    for (double m : req.meshes) {
      const FrontSolution sol = evolve(base.flux, base.initial, T, m, base.interaction);
      ConvergenceRow row;
      row.nx = base.grid.nx;
      row.nv = base.grid.nv;
      row.mesh = m;
      row.trace_error = std::abs(sample(sol, pt, px) - sample(ref, pt, px));
      out.mesh_rows.push_back(row);
      ms.push_back(m);
      errs.push_back(row.trace_error);
    }
    out.trace_error_rate = numerics::loglog_rate(ms, errs);
  }
  return out;
}

}  // namespace lagchar
