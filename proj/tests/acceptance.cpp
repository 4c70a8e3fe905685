// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.
// Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "lagchar/characteristics.hpp"
#include "lagchar/report.hpp"

using namespace lagchar;

namespace {

constexpr double kMesh = 1.0 / 64.0;
constexpr int kGrid = 256;

int failures = 0;

void verdict(int id, const std::string& what, bool pass, const std::string& detail) {
  std::printf("%s  criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Case {
  FrontSolution sol;
  Ensemble hyp;
  Ensemble epi;
};

Case make_case(const FluxModel& flux, double left, std::vector<InitialJump> jumps,
               double x_lo, double x_hi, std::uint64_t seed, unsigned nthreads) {
  FrontSolution sol = evolve(flux, InitialData{left, std::move(jumps)}, 1.0, kMesh);
  GridSpec g{kGrid, kGrid, x_lo, x_hi, seed};
  Ensemble hyp = build_ensemble(sol, Side::Hypograph, g, nthreads);
  g.seed = seed + 1;
  Ensemble epi = build_ensemble(sol, Side::Epigraph, g, nthreads);
  return Case{std::move(sol), std::move(hyp), std::move(epi)};
}

TestFunction plateau_in_time(double t_a, double t_b) {
  return TestFunction{PlateauBump(t_a, t_b, 0.0), PlateauBump(-1e6, 1e6, 0.0)};
}

Surface front_path(const FrontSolution& sol, double t_a, double t_b) {
  SurfaceSpec spec;
  spec.name = "shock_path";
  spec.ts = {t_a, t_b};
  spec.front = 0;
  return resolve_surface(spec, sol);
}

std::vector<Scenario> bundled() {
  std::vector<Scenario> out;
  for (const char* name : {"entropic_shock", "nonentropic_shock", "rarefaction_fan", "constant",
                           "shock_merge", "quartic_shock"}) {
    Scenario sc = load_scenario_file(std::string(LAGCHAR_SCENARIO_DIR) + "/" + name + ".toml");
    sc.threads = threads();
    out.push_back(std::move(sc));
  }
  return out;
}

// 1. Level total variation of the hypograph ensemble equals the dissipation
//    of u^2/2 at the Burgers shock 1 | 0.
void dissipation_identity() {
  const auto start = std::chrono::steady_clock::now();
  const FluxModel burgers = FluxModel::burgers();
  const auto sol = evolve(burgers, InitialData{1.0, {{1.0, 0.0}}}, 1.0, kMesh);
  const auto hyp = build_ensemble(sol, Side::Hypograph, {kGrid, kGrid, -1.0, 3.0, 42}, 1);
  const double tv = tv_dissipation(hyp, Window{0.0, 1.0});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double oracle = std::abs(shock_dissipation_rate(make_shock(burgers, 1.0, 0.0),
                                                        make_quadratic(burgers, Anchor::ZeroAtZero)));
  const double rel = std::abs(tv - oracle) / oracle;
  verdict(1, "dissipation identity", rel <= 0.03 && secs < 30.0 && std::abs(oracle - 1.0 / 12) < 1e-12,
          fmt("tv=%.6f oracle=%.6f rel=%.4f", tv, oracle, rel) + fmt(" (%.1fs, 1 thread)", secs));
}

// 2 and 3. Lagrangian flux against the trace flux at the Burgers shock.
void flux_formulas(const Case& c) {
  const FluxModel& f = c.sol.flux;
  const Surface behind = Surface::vertical(1.25, 0.6, 0.9);
  const Surface shock = front_path(c.sol, 0.2, 0.8);
  const Surface early = Surface::vertical(1.25, 0.1, 0.4);
  const TestFunction phi_behind = plateau_in_time(0.6, 0.9);
  const TestFunction phi_shock = plateau_in_time(0.2, 0.8);
  const TestFunction phi_early = plateau_in_time(0.1, 0.4);

  {
    const auto quad = make_quadratic(f, Anchor::ZeroAtZero);
    const double tr1 = trace_flux(c.sol, behind, quad, phi_behind);
    const auto lag1 = lagrangian_flux(c.hyp, behind, quad, phi_behind, threads());
    const double rel1 = std::abs(lag1.total - tr1) / std::abs(tr1);
    const double tr2 = trace_flux(c.sol, shock, quad, phi_shock);
    const auto lag2 = lagrangian_flux(c.hyp, shock, quad, phi_shock, threads());
    const double rel2 = std::abs(lag2.total - tr2) / std::abs(tr2);
    const double share = lag2.bminus / lag2.total;
    const bool ok = std::abs(tr1 - 0.1) <= 1e-9 && rel1 <= 0.02 &&
                    std::abs(tr2 - 0.6 / 12.0) <= 1e-9 && rel2 <= 0.02 && share >= 0.95;
    verdict(2, "flux formula (hypograph)", ok,
            fmt("x=1.25: trace=%.6f rel=%.4f; ", tr1, rel1) +
                fmt("shock: trace=%.6f rel=%.4f B- share=%.4f", tr2, rel2, share));
  }

  {
    // With eta(1) = q(1) = 0 the trace vanishes behind and along the shock;
    // there the gap is held to 2% of the flux scale 0.01 * int Phi dt.
    const auto quad = make_quadratic(f, Anchor::ZeroAtOne);
    struct Item {
      const Surface* s;
      const TestFunction* phi;
      const char* name;
    };
    double worst = 0.0;
    std::string detail;
    for (const Item& it : {Item{&behind, &phi_behind, "x=1.25 late"},
                           Item{&shock, &phi_shock, "shock"},
                           Item{&early, &phi_early, "x=1.25 early"}}) {
      const double tr = trace_flux(c.sol, *it.s, quad, *it.phi);
      const double lag = lagrangian_flux(c.epi, *it.s, quad, *it.phi, threads()).total;
      const double scale = std::max(std::abs(tr), 0.01 * (it.s->t_b() - it.s->t_a()));
      const double rel = std::abs(lag - tr) / scale;
      worst = std::max(worst, rel);
      detail += std::string(it.name) + fmt(": trace=%.5f lag=%.5f err=%.4f; ", tr, lag, rel);
    }
    verdict(3, "flux formula (epigraph)", worst <= 0.02, detail);
  }
}

// 4. Bounce map endpoints and involution.
void bounce_endpoints() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double end_err = 0.0;
  double inv_err = 0.0;
  for (const FluxModel& f : {FluxModel::burgers(),
                             FluxModel::polynomial({0.0, 0.0, 0.5, 0.0, 0.25}, "quartic")}) {
    int drawn = 0;
    while (drawn < 1000) {
      double a = unit(rng);
      double b = unit(rng);
      if (std::abs(a - b) < 1e-3) continue;
      ++drawn;
      const double ul = std::max(a, b);
      const double ur = std::min(a, b);
      const ShockData s = make_shock(f, ul, ur);
      end_err = std::max(end_err, std::abs(bounce_map(s, f, ul - 1e-6).level - ur));
      const double v = s.lo() + (s.hi() - s.lo()) * (0.001 + 0.998 * unit(rng));
      const double w = bounce_map(s, f, v).level;
      if (w > s.lo() && w < s.hi()) {
        inv_err = std::max(inv_err, std::abs(bounce_map(s, f, w).level - v));
      }
    }
  }
  verdict(4, "bounce map endpoints", end_err <= 1e-4 && inv_err <= 1e-9,
          fmt("max |B(ul-1e-6)-ur|=%.3g max |B(B(v))-v|=%.3g", end_err, inv_err));
}

// 5. Empirical pushforward against the exact hypograph and epigraph areas.
void pushforward(const Case& shock, const Case& fan) {
  double worst_ratio = 0.0;
  for (const auto* c : {&shock, &fan}) {
    const double bound = 2.0 * (c->hyp.dx() + c->hyp.dv());
    for (double t : {0.0, 0.5, 1.0}) {
      for (const Ensemble* e : {&c->hyp, &c->epi}) {
        const double d = pushforward_per_perimeter(*e, c->sol, t, 8);
        worst_ratio = std::max(worst_ratio, d / bound);
      }
    }
  }
  verdict(5, "pushforward", worst_ratio <= 1.0,
          fmt("worst discrepancy per perimeter = %.3f of 2(dx+dv)", worst_ratio));
}

// 6. Epigraph curves never pass hypograph curves from the right.
void no_crossing(const std::vector<const Case*>& cases) {
  std::size_t pairs = 0;
  std::size_t bad = 0;
  for (const auto* c : cases) {
    const auto rep = check_no_crossing(c->hyp, c->epi, c->sol.flux.s_max() * c->sol.horizon,
                                       10000, 5, 1e-10);
    pairs += rep.pairs_checked;
    bad += rep.violations;
  }
  verdict(6, "no crossing", bad == 0 && pairs >= 10000 * cases.size(),
          fmt("%.0f pairs, %.0f violations", static_cast<double>(pairs),
              static_cast<double>(bad)));
}

double sup_distance(const PolyLine& p, double x0, double speed, double t_ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.ts.size(); ++i) {
    worst = std::max(worst, std::abs(p.xs[i] - (x0 + speed * (p.ts[i] - t_ref))));
  }
  return worst;
}

// 7. Characteristic inside the fan: x = t / 2.
void fan_characteristic(const Case& fan) {
  const auto ch = refine_barrier(fan.hyp, fan.sol.flux, 0.25, kDefaultLevels, 0.5, 1.0);
  const double dev = sup_distance(ch.curve, 0.25, 0.5, 0.5);
  const double bound = 2.0 * fan.hyp.dv() * 1.0;
  verdict(7, "characteristic in the fan", dev <= bound,
          fmt("sup |x(t)-t/2| = %.5f, bound 2dv T = %.5f", dev, bound));
}

// 8 and 9. Characteristic from the foot of a shock: it should ride the front.
void shock_characteristic(int id, const char* what, const Case& c) {
  auto ch = refine_barrier(c.hyp, c.sol.flux, 1.0, kDefaultLevels, 0.0, 1.0);
  const double dev = sup_distance(ch.curve, 1.0, 0.5, 0.0);
  const auto rep = verify_characteristic(ch, c.sol, default_speed_tol(c.hyp, kMesh, c.sol.flux),
                                         0.25 * c.hyp.dx(), 32, &c.hyp);
  const double frac = rep.jump_fraction_within(2.0 * c.hyp.dv());
  const bool ok = dev <= c.hyp.dx() && rep.jump_cells > 0 && frac >= 0.95;
  verdict(id, what, ok,
          fmt("sup |x(t)-(1+t/2)| = %.5f (cell %.5f), ", dev, c.hyp.dx()) +
              fmt("%.0f jump cells, RH within 2dv on %.3f", static_cast<double>(rep.jump_cells),
                  frac));
}

// 10. Intersection counts and tangency mass on every bundled surface.
void intersections(const std::vector<Scenario>& scs, const std::vector<Case>& runs) {
  const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
  bool ok = true;
  double worst_r2 = 1.0;
  int fits = 0;
  int skipped = 0;
  double worst_margin = -1e300;
  for (std::size_t k = 0; k < scs.size(); ++k) {
    const auto& sol = runs[k].sol;
    for (const auto& spec : scs[k].surfaces) {
      const Surface sigma = resolve_surface(spec, sol);
      const auto st = intersection_statistics(runs[k].hyp, sigma, eps, threads());
      const double bound = static_cast<double>(sol.segment_count() + sigma.s.ts.size() + 1);
      worst_margin = std::max(worst_margin, static_cast<double>(st.max_count) - bound);
      ok = ok && static_cast<double>(st.max_count) <= bound;
      bool positive = true;
      for (double m : st.tangency_mass) positive = positive && m > 0.0;
      if (!positive) {
        ++skipped;
        continue;
      }
      ++fits;
      worst_r2 = std::min(worst_r2, st.r_squared);
      ok = ok && st.r_squared >= 0.9;
    }
  }
  verdict(10, "finite intersections", ok,
          fmt("max count - bound = %.0f, worst R2 = %.4f over %.0f fits", worst_margin, worst_r2,
              fits) +
              fmt(" (%.0f surfaces with no tangent mass)", skipped));
}

// 11. Weak form of every bundled front solution.
void weak_residual(const std::vector<Case>& runs) {
  double worst = 0.0;
  for (const auto& c : runs) {
    for (const auto& phi : random_bumps(c.sol, 10, 17)) {
      worst = std::max(worst, std::abs(weak_form_residual(c.sol, phi)));
    }
  }
  verdict(11, "weak residual", worst <= 1e-6, fmt("max residual = %.3g", worst));
}

// 12. Mollified strip flux and the telescoped pairing.
void strip_and_pairing(const std::vector<Scenario>& scs, const std::vector<Case>& runs) {
  double moll = 0.0;
  double tp = 0.0;
  std::size_t curves = 0;
  for (std::size_t k = 0; k < scs.size(); ++k) {
    const auto& c = runs[k];
    for (const auto& spec : scs[k].surfaces) {
      const Surface sigma = resolve_surface(spec, c.sol);
      const TestFunction phi{spec.phi_t, spec.phi_x};
      for (const auto& req : scs[k].entropies) {
        const auto pair = make_entropy(req.spec, c.sol.flux, req.anchor);
        moll = std::max(moll, std::abs(mollified_flux(c.sol, sigma, pair, phi, 1e-3) -
                                       trace_flux(c.sol, sigma, pair, phi)));
        const Ensemble& e = req.anchor == Anchor::ZeroAtZero ? c.hyp : c.epi;
        const auto diffs = numerics::parallel_map<double>(e.curves.size(), threads(), [&](std::size_t i) {
          const auto& cv = e.curves[i];
          return std::abs(curve_flux_pairing(classify_intersections(cv, sigma).records, pair, phi) -
                          theta_psi_pairing(cv, sigma, pair, phi));
        });
        for (double d : diffs) tp = std::max(tp, d);
        curves += diffs.size();
      }
    }
  }
  verdict(12, "mollified flux and pairing", moll <= 1e-2 && tp <= 1e-12,
          fmt("max |mollified-trace| = %.3g, max pairing diff = %.3g over %.0f curves", moll, tp,
              static_cast<double>(curves)));
}

}  // namespace

int main() {
  try {
    const unsigned n = threads();
    const FluxModel burgers = FluxModel::burgers();
    const Case shock = make_case(burgers, 1.0, {{1.0, 0.0}}, -1.0, 3.0, 42, n);
    const Case fan = make_case(burgers, 0.0, {{0.0, 1.0}}, -1.0, 2.0, 42, n);
    const Case nonentropic =
        make_case(burgers, 0.0, {{1.0, 1.0, JumpMode::NonEntropic}}, -1.0, 3.0, 42, n);

    dissipation_identity();
    flux_formulas(shock);
    bounce_endpoints();
    pushforward(shock, fan);
    no_crossing({&shock, &fan, &nonentropic});
    fan_characteristic(fan);
    shock_characteristic(8, "characteristic at entropic shock", shock);
    shock_characteristic(9, "characteristic at non-entropic shock", nonentropic);

    const auto scs = bundled();
    std::vector<Case> runs;
    for (const auto& sc : scs) {
      const auto sol = simulate(sc);
      auto ens = build_ensembles(sc, sol);
      runs.push_back(Case{sol, std::move(ens.hyp), std::move(ens.epi)});
    }
    intersections(scs, runs);
    weak_residual(runs);
    strip_and_pairing(scs, runs);
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
