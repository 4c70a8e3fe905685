#pragma once

// Barrier curves built from a hypograph ensemble: on each restart interval
// the barrier follows the right-most position reachable by curves that were
// left of it at the restart time. Refining the restart grid dyadically gives
// the generalized characteristic through a point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lagchar/flux_model.hpp"
#include "lagchar/front_tracking.hpp"
#include "lagchar/lagrangian.hpp"
#include "lagchar/polyline.hpp"

namespace lagchar {

inline constexpr double kLeftOfSlack = 1e-12;
inline constexpr int kDefaultLevels = 6;

struct CellRecord {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double x_mid = 0.0;
  double u_minus = 0.0;
  double u_plus = 0.0;
  double xprime = 0.0;
  double target_speed = 0.0;
  double residual = 0.0;
  bool jump = false;
  bool kruzkov_ok = true;
  bool violation = false;
  double nu_ratio = 0.0;

  double t_mid() const { return 0.5 * (t_lo + t_hi); }
  double width() const { return t_hi - t_lo; }
};

struct Characteristic {
  PolyLine curve;
  double t0 = 0.0;
  double x0 = 0.0;
  std::vector<double> deltas;
  // Between consecutive levels n-1 and n: sup |x_n - x_{n-1}| and
  // min (x_n - x_{n-1}); the second should not go much below zero.
  std::vector<double> level_gaps;
  std::vector<double> level_min_increase;
  std::vector<PolyLine> levels;
  std::vector<CellRecord> diagnostics;
};

namespace detail {

inline bool left_of(double gx, double x) { return gx < x + kLeftOfSlack; }

// Indices of curves left of x at time a that can still reach the vacuum line
// x + f'(0)(s - a) before time b.
inline std::vector<std::size_t> barrier_candidates(const Ensemble& ens,
                                                   const FluxModel& flux,
                                                   double a, double b, double x) {
  const double band = (flux.df(1.0) - flux.df(0.0)) * (b - a);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ens.curves.size(); ++i) {
    const double gx = ens.curves[i].x_at(a);
    if (left_of(gx, x) && gx >= x - band - kLeftOfSlack) out.push_back(i);
  }
  return out;
}

struct Line {
  double value;  // at the start of the sub-interval
  double slope;
};

// Upper envelope of lines on [p, q], appended to `out` (start vertex
// excluded).
inline void append_envelope(const std::vector<Line>& lines, double p, double q,
                            PolyLine& out) {
  std::size_t cur = 0;
  for (std::size_t j = 1; j < lines.size(); ++j) {
    const auto& a = lines[j];
    const auto& c = lines[cur];
    if (a.value > c.value || (a.value == c.value && a.slope > c.slope)) cur = j;
  }
  double t = p;
  while (true) {
    const double vc = lines[cur].value + lines[cur].slope * (t - p);
    double best_tau = q;
    std::size_t next = cur;
    for (std::size_t j = 0; j < lines.size(); ++j) {
      if (lines[j].slope <= lines[cur].slope) continue;
      const double vj = lines[j].value + lines[j].slope * (t - p);
      const double tau = t + std::max(0.0, vc - vj) / (lines[j].slope - lines[cur].slope);
      if (tau < best_tau || (tau == best_tau && next != cur &&
                             lines[j].slope > lines[next].slope)) {
        best_tau = tau;
        next = j;
      }
    }
    if (next == cur || best_tau >= q) break;
    out.append(best_tau, lines[cur].value + lines[cur].slope * (best_tau - p));
    cur = next;
    t = best_tau;
  }
  out.append(q, lines[cur].value + lines[cur].slope * (q - p));
}

inline PolyLine drop_collinear(const PolyLine& in) {
  PolyLine out;
  out.ts.push_back(in.ts.front());
  out.xs.push_back(in.xs.front());
  for (std::size_t i = 1; i + 1 < in.ts.size(); ++i) {
    const double s1 = (in.xs[i] - out.xs.back()) / (in.ts[i] - out.ts.back());
    const double s2 = in.slope(i);
    if (std::abs(s1 - s2) > 1e-13 * (1.0 + std::abs(s1))) {
      out.ts.push_back(in.ts[i]);
      out.xs.push_back(in.xs[i]);
    }
  }
  out.ts.push_back(in.ts.back());
  out.xs.push_back(in.xs.back());
  return out;
}

inline std::vector<double> restart_times(double t_start, double horizon,
                                         double delta) {
  std::vector<double> ts{t_start};
  for (long k = static_cast<long>(std::floor(t_start / delta)) + 1;; ++k) {
    const double t = k * delta;
    if (t >= horizon - 1e-12 * horizon) break;
    if (t > t_start + 1e-12) ts.push_back(t);
  }
  ts.push_back(horizon);
  return ts;
}

}  // namespace detail

/// Right-most position at time s reached by ensemble curves lying left of x
/// at time t, floored by the vacuum line x + f'(0)(s - t).
inline double rightmost_reachable(const Ensemble& hyp, const FluxModel& flux,
                                  double t, double x, double s) {
  if (s < t) throw DomainError("rightmost_reachable needs s >= t");
  double best = x + flux.df(0.0) * (s - t);
  for (const auto& c : hyp.curves) {
    if (detail::left_of(c.x_at(t), x)) best = std::max(best, c.x_at(s));
  }
  return best;
}

/// x^delta: restarts at t_k = k delta (anchored at 0) and follows the upper
/// envelope of the reachable curves in between. Exact for piecewise-linear
/// curves.
inline PolyLine build_barrier(const Ensemble& hyp, const FluxModel& flux,
                              double x0, double delta, double t_start = 0.0,
                              double horizon = -1.0) {
  if (!(delta > 0.0)) throw DomainError("barrier step delta must be positive");
  const double T = horizon > 0.0 ? horizon : hyp.horizon;
  if (!(T > t_start)) throw DomainError("barrier needs t_start < horizon");
  const auto grid = detail::restart_times(t_start, T, delta);
  PolyLine out;
  out.append(t_start, x0);
  double x = x0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k];
    const double b = grid[k + 1];
    const auto cand = detail::barrier_candidates(hyp, flux, a, b, x);
    std::vector<double> cuts{a, b};
    for (std::size_t i : cand) {
      for (double tc : hyp.curves[i].times) {
        if (tc > a && tc < b) cuts.push_back(tc);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<detail::Line> lines(cand.size() + 1);
    for (std::size_t m = 0; m + 1 < cuts.size(); ++m) {
      const double p = cuts[m];
      const double q = cuts[m + 1];
      lines[0] = {x + flux.df(0.0) * (p - a), flux.df(0.0)};
      for (std::size_t n = 0; n < cand.size(); ++n) {
        const auto& c = hyp.curves[cand[n]];
        const double xp = c.x_at(p);
        lines[n + 1] = {xp, (c.x_at(q) - xp) / (q - p)};
      }
      detail::append_envelope(lines, p, q, out);
    }
    x = out.xs.back();
  }
  return detail::drop_collinear(out);
}

/// Sup and min of (b - a) over [t_lo, t_hi]; both are attained at vertices.
inline std::pair<double, double> polyline_gap(const PolyLine& a,
                                              const PolyLine& b) {
  const auto ts = merged_times(a.ts, b.ts, std::max(a.t_begin(), b.t_begin()),
                               std::min(a.t_end(), b.t_end()));
  double sup = 0.0;
  double mn = std::numeric_limits<double>::infinity();
  for (double t : ts) {
    const double d = b(t) - a(t);
    sup = std::max(sup, std::abs(d));
    mn = std::min(mn, d);
  }
  return {sup, mn};
}

inline Characteristic refine_barrier(const Ensemble& hyp, const FluxModel& flux,
                                     double x0, int n_levels = kDefaultLevels,
                                     double t_start = 0.0,
                                     double horizon = -1.0) {
  if (n_levels < 1) throw DomainError("refine_barrier needs at least one level");
  const double T = horizon > 0.0 ? horizon : hyp.horizon;
  Characteristic ch;
  ch.t0 = t_start;
  ch.x0 = x0;
  for (int n = 1; n <= n_levels; ++n) {
    const double delta = T / std::ldexp(1.0, n);
    ch.deltas.push_back(delta);
    ch.levels.push_back(build_barrier(hyp, flux, x0, delta, t_start, T));
    if (n > 1) {
      const auto [sup, mn] = polyline_gap(ch.levels[n - 2], ch.levels[n - 1]);
      ch.level_gaps.push_back(sup);
      ch.level_min_increase.push_back(mn);
    }
  }
  ch.curve = ch.levels.back();
  return ch;
}

struct VerifyReport {
  std::vector<CellRecord> cells;
  double tol = 0.0;
  double violating_time = 0.0;
  double total_time = 0.0;
  std::size_t jump_cells = 0;
  std::size_t kruzkov_failures = 0;

  double violating_fraction() const {
    return total_time > 0.0 ? violating_time / total_time : 0.0;
  }
  // Fraction of jump cells whose RH residual is at most `bound`.
  double jump_fraction_within(double bound) const {
    std::size_t ok = 0;
    for (const auto& c : cells) {
      if (c.jump && c.residual <= bound) ++ok;
    }
    return jump_cells ? static_cast<double>(ok) / jump_cells : 1.0;
  }
};

inline double default_speed_tol(const Ensemble& ens, double mesh,
                                const FluxModel& flux) {
  return std::max(2.0 * ens.dv(), 2.0 * mesh) * (1.0 + flux.s_max());
}

/// Splits [t0, T] into cells, reads the traces at each cell midpoint (fronts
/// within `snap` of the curve count as on it) and compares the cell's secant
/// speed with f'(u) or the Rankine-Hugoniot speed. Where the traces agree it
/// also checks the one-sided Kruzkov flux inequalities for levels a_i.
inline VerifyReport verify_characteristic(Characteristic& ch,
                                          const FrontSolution& sol, double tol,
                                          double snap, int cells = 32,
                                          const Ensemble* hyp = nullptr) {
  const auto& flux = sol.flux;
  const PolyLine& x = ch.curve;
  VerifyReport rep;
  rep.tol = tol;
  const double t0 = x.t_begin();
  const double h = (x.t_end() - t0) / cells;
  std::vector<EntropyPair> upper;
  std::vector<EntropyPair> lower;
  for (int i = 1; i < 10; ++i) {
    upper.push_back(make_kruzkov(flux, 0.1 * i, Anchor::ZeroAtZero));
    lower.push_back(make_kruzkov_lower(flux, 0.1 * i, Anchor::ZeroAtOne));
  }
  for (int c = 0; c < cells; ++c) {
    CellRecord r;
    r.t_lo = t0 + c * h;
    r.t_hi = c + 1 == cells ? x.t_end() : t0 + (c + 1) * h;
    const double tm = r.t_mid();
    r.x_mid = x(tm);
    const Trace tr = trace(sol, tm, r.x_mid, snap);
    r.u_minus = tr.u_minus;
    r.u_plus = tr.u_plus;
    r.xprime = (x(r.t_hi) - x(r.t_lo)) / r.width();
    r.jump = std::abs(r.u_minus - r.u_plus) > kEqualStatesTol;
    r.target_speed = r.jump ? rh_speed(flux, r.u_minus, r.u_plus) : flux.df(r.u_minus);
    r.residual = std::abs(r.xprime - r.target_speed);
    if (!r.jump) {
      const double u = r.u_minus;
      for (const auto& p : upper) {
        if (p.q(u) - r.xprime * p.eta(u) > tol * p.eta(u) + 1e-14) r.kruzkov_ok = false;
      }
      for (const auto& p : lower) {
        if (p.q(u) - r.xprime * p.eta(u) < -tol * p.eta(u) - 1e-14) r.kruzkov_ok = false;
      }
    }
    r.violation = r.residual > tol || !r.kruzkov_ok;
    if (hyp) {
      const double rad = 0.5 * h;
      r.nu_ratio = tv_dissipation(*hyp, Window{tm - rad, tm + rad, r.x_mid - rad,
                                               r.x_mid + rad}) / rad;
    }
    rep.total_time += r.width();
    if (r.violation) rep.violating_time += r.width();
    if (r.jump) ++rep.jump_cells;
    if (!r.kruzkov_ok) ++rep.kruzkov_failures;
    rep.cells.push_back(r);
  }
  ch.diagnostics = rep.cells;
  return rep;
}

inline LagCurve as_curve(const PolyLine& p) {
  LagCurve c;
  c.times = p.ts;
  c.xs = p.xs;
  c.vs.assign(p.ts.size() - 1, 0.0);
  return c;
}

/// Epigraph curves passing from the right of the characteristic to its left.
inline std::size_t check_right_barrier(const Characteristic& ch,
                                       const Ensemble& epi,
                                       double slack = 1e-10) {
  const LagCurve b = as_curve(ch.curve);
  std::size_t n = 0;
  for (const auto& c : epi.curves) {
    if (crosses_right_to_left(b, c, slack)) ++n;
  }
  return n;
}

/// Hypograph curves passing from the left of the characteristic to its right.
inline std::size_t check_left_barrier(const Characteristic& ch,
                                      const Ensemble& hyp,
                                      double slack = 1e-10) {
  const LagCurve b = as_curve(ch.curve);
  std::size_t n = 0;
  for (const auto& c : hyp.curves) {
    if (crosses_right_to_left(c, b, slack)) ++n;
  }
  return n;
}

/// nu(B_r(t0, x0)) / r for sup-norm balls, nu measured by level jumps.
inline std::vector<double> dissipation_ratio(const Ensemble& hyp, double t0,
                                             double x0,
                                             const std::vector<double>& radii) {
  std::vector<double> out;
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("dissipation radius must be positive");
    out.push_back(tv_dissipation(hyp, Window{t0 - r, t0 + r, x0 - r, x0 + r}) / r);
  }
  return out;
}

}  // namespace lagchar
