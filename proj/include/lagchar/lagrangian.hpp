#pragma once

// Weighted curve ensembles representing the hypograph {v < u} or epigraph
// {v > u} of a front-tracking solution. Each curve moves at f'(level); when
// it meets a front whose far side does not contain its level it bounces to
// the conjugate level given by bounce_map.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lagchar/errors.hpp"
#include "lagchar/flux_model.hpp"
#include "lagchar/front_tracking.hpp"
#include "lagchar/numerics.hpp"

namespace lagchar {

enum class Side { Hypograph, Epigraph };
enum class JumpCause { BounceLeft, BounceRight, SonicFlag };

inline const char* to_string(Side s) {
  return s == Side::Hypograph ? "hypograph" : "epigraph";
}

inline const char* to_string(JumpCause c) {
  switch (c) {
    case JumpCause::BounceLeft:
      return "bounce_left";
    case JumpCause::BounceRight:
      return "bounce_right";
    case JumpCause::SonicFlag:
      return "sonic_flag";
  }
  return "?";
}

struct LevelJump {
  double t = 0.0;
  double x = 0.0;
  double v_minus = 0.0;
  double v_plus = 0.0;
  JumpCause cause = JumpCause::BounceLeft;
  int front_id = -1;

  double size() const { return std::abs(v_plus - v_minus); }
};

/// Piecewise-linear position, piecewise-constant level. vs[i] is the level
/// on [times[i], times[i+1]).
struct LagCurve {
  int id = -1;
  double weight = 0.0;
  std::vector<double> times;
  std::vector<double> xs;
  std::vector<double> vs;
  std::vector<LevelJump> jumps;

  double x0() const { return xs.front(); }
  double v0() const { return vs.front(); }
  std::size_t segments() const { return vs.size(); }

  std::size_t segment_at(double t) const {
    if (t <= times.front()) return 0;
    if (t >= times.back()) return vs.size() - 1;
    auto it = std::upper_bound(times.begin(), times.end(), t);
    return static_cast<std::size_t>(it - times.begin()) - 1;
  }

  double slope(std::size_t i) const {
    return (xs[i + 1] - xs[i]) / (times[i + 1] - times[i]);
  }

  double x_at(double t) const {
    const std::size_t i = segment_at(t);
    const double span = times[i + 1] - times[i];
    if (span <= 0.0) return xs[i];
    const double w = (t - times[i]) / span;
    return xs[i] + w * (xs[i + 1] - xs[i]);
  }

  // Right-continuous level.
  double v_at(double t) const { return vs[segment_at(t)]; }

  double total_variation() const {
    double tv = 0.0;
    for (const auto& j : jumps) tv += j.size();
    return tv;
  }
};

struct GridSpec {
  int nx = 256;
  int nv = 256;
  double x_lo = -1.0;
  double x_hi = 1.0;
  std::uint64_t seed = 1;

  double dx() const { return (x_hi - x_lo) / nx; }
  double dv() const { return 1.0 / nv; }
};

struct Ensemble {
  Side side = Side::Hypograph;
  GridSpec grid;
  std::vector<LagCurve> curves;
  std::string solution_ref;
  double horizon = 0.0;

  double dx() const { return grid.dx(); }
  double dv() const { return grid.dv(); }

  double total_mass() const {
    double m = 0.0;
    for (const auto& c : curves) m += c.weight;
    return m;
  }
};

inline bool level_inside(Side side, double v, double u) {
  return side == Side::Hypograph ? v < u : v > u;
}

namespace detail {

// Non-strict test used on the far side of a front: a level sitting exactly
// on the far state crosses instead of bouncing.
inline bool level_admitted(Side side, double v, double u) {
  return side == Side::Hypograph ? v <= u : v >= u;
}

inline constexpr double kCoincideTol = 1e-12;

class CurveStepper {
 public:
  CurveStepper(const FrontSolution& sol, Side side, double x0, double v0)
      : sol_(sol), side_(side), t_(0.0), x_(x0), v_(v0) {
    const double u0 = sample(sol, 0.0, x0);
    if (!level_inside(side, v0, u0)) {
      std::ostringstream os;
      os << "evolve_curve: (x0=" << x0 << ", v0=" << v0 << ") is not in the "
         << to_string(side) << " of u0 = " << u0;
      throw DomainError(os.str());
    }
    curve_.times.push_back(0.0);
    curve_.xs.push_back(x0);
    max_steps_ = 64 * (sol.segment_count() + sol.epochs.size()) + 4096;
  }

  LagCurve run() {
    relocate();
    for (;;) {
      if (++steps_ > max_steps_) {
        std::ostringstream os;
        os << "evolve_curve: step limit exceeded for curve starting at x0="
           << curve_.xs.front();
        throw Error(os.str());
      }
      const Epoch& ep = sol_.epochs[e_];
      const double c = sol_.flux.df(v_);
      double t_meet = ep.t_end;
      int which = 0;
      if (k_ < ep.fronts.size()) {
        const FrontSegment& f = ep.fronts[k_];
        if (f.front_id != riding_ && c > f.speed) {
          const double gap = std::max(0.0, f.x_at(t_) - x_);
          const double tm = t_ + gap / (c - f.speed);
          if (tm < t_meet) {
            t_meet = tm;
            which = +1;
          }
        }
      }
      if (k_ > 0) {
        const FrontSegment& f = ep.fronts[k_ - 1];
        if (f.front_id != riding_ && f.speed > c) {
          const double gap = std::max(0.0, x_ - f.x_at(t_));
          const double tm = t_ + gap / (f.speed - c);
          if (tm < t_meet) {
            t_meet = tm;
            which = -1;
          }
        }
      }
      if (which == 0) {
        x_ += c * (ep.t_end - t_);
        t_ = ep.t_end;
        if (e_ + 1 >= sol_.epochs.size() || t_ >= sol_.horizon) break;
        ++e_;
        riding_ = -1;
        relocate();
        continue;
      }
      const std::size_t fi = which > 0 ? k_ : k_ - 1;
      const FrontSegment& f = ep.fronts[fi];
      t_ = t_meet;
      x_ = f.x_at(t_meet);
      meet(ep, fi, which > 0);
    }
    curve_.vs.push_back(v_);
    if (t_ > curve_.times.back()) {
      curve_.times.push_back(t_);
      curve_.xs.push_back(x_);
    } else {
      // A jump exactly at the horizon leaves no segment behind it.
      curve_.vs.pop_back();
    }
    return std::move(curve_);
  }

 private:
  // The curve reaches front fi of the epoch; from_left tells which side it
  // comes from. Crosses or bounces. Returns true on a bounce.
  bool meet(const Epoch& ep, std::size_t fi, bool from_left) {
    const FrontSegment& f = ep.fronts[fi];
    const double far = from_left ? ep.states[fi + 1] : ep.states[fi];
    if (level_admitted(side_, v_, far)) {
      k_ = from_left ? fi + 1 : fi;
      return false;
    }
    const ShockData shock = make_shock(sol_.flux, f.u_left, f.u_right);
    const BounceResult b = bounce_map(shock, sol_.flux, v_);
    if (b.sonic) {
      record_jump(b.level, JumpCause::SonicFlag, f.front_id);
      riding_ = f.front_id;
      return true;
    }
    record_jump(b.level,
                from_left ? JumpCause::BounceLeft : JumpCause::BounceRight,
                f.front_id);
    return true;
  }

  void record_jump(double w, JumpCause cause, int front_id) {
    curve_.jumps.push_back({t_, x_, v_, w, cause, front_id});
    if (t_ > curve_.times.back()) {
      curve_.vs.push_back(v_);
      curve_.times.push_back(t_);
      curve_.xs.push_back(x_);
    }
    v_ = w;
  }

  // Slab index at the start of a new epoch. Fronts within kCoincideTol of
  // the curve are taken to be on its right; a coincident front the curve
  // outruns is met immediately.
  void relocate() {
    const Epoch& ep = sol_.epochs[e_];
    const std::size_t n = ep.fronts.size();
    std::size_t k = 0;
    while (k < n && ep.fronts[k].x_at(t_) < x_ - kCoincideTol) ++k;
    std::size_t k_hi = k;
    while (k_hi < n && ep.fronts[k_hi].x_at(t_) <= x_ + kCoincideTol) ++k_hi;
    const std::size_t k_lo = k;
    k_ = k;
    const double eps = 1e-14 * std::max(1.0, sol_.flux.s_max());
    for (std::size_t i = k_lo; i < k_hi; ++i) {
      const FrontSegment& f = ep.fronts[i];
      const double c = sol_.flux.df(v_);
      if (std::abs(c - f.speed) <= eps) {
        if (!level_admitted(side_, v_, ep.states[i + 1]) &&
            level_inside(side_, v_, ep.states[i])) {
          record_jump(v_, JumpCause::SonicFlag, f.front_id);
          riding_ = f.front_id;
          break;
        }
        k_ = i + 1;
        continue;
      }
      if (c < f.speed) break;
      x_ = f.x_at(t_);
      if (meet(ep, i, true)) break;
    }
    if (!level_inside(side_, v_, ep.states[k_])) {
      // Coincident fronts ordered the wrong way round; take the first slab
      // among the candidates that holds the level.
      for (std::size_t k2 = k_lo; k2 <= k_hi; ++k2) {
        if (level_inside(side_, v_, ep.states[k2])) {
          k_ = k2;
          return;
        }
      }
      for (std::size_t k2 = k_lo; k2 <= k_hi; ++k2) {
        if (level_admitted(side_, v_, ep.states[k2])) {
          k_ = k2;
          return;
        }
      }
      std::ostringstream os;
      os << "evolve_curve: level " << v_ << " lost its region at t=" << t_
         << ", x=" << x_;
      throw Error(os.str());
    }
  }

  const FrontSolution& sol_;
  Side side_;
  double t_;
  double x_;
  double v_;
  std::size_t e_ = 0;
  std::size_t k_ = 0;
  int riding_ = -1;
  std::size_t steps_ = 0;
  std::size_t max_steps_ = 0;
  LagCurve curve_;
};

}  // namespace detail

inline LagCurve evolve_curve(const FrontSolution& sol, double x0, double v0,
                             Side side = Side::Hypograph) {
  return detail::CurveStepper(sol, side, x0, v0).run();
}

/// First point where the curve leaves [x_lo, x_hi], if any.
inline bool exits_window(const LagCurve& c, double x_lo, double x_hi,
                         double* t_exit = nullptr) {
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    if (c.xs[i] < x_lo || c.xs[i] > x_hi) {
      if (t_exit) *t_exit = c.times[i];
      return true;
    }
  }
  return false;
}

/// One jittered representative per (x, v) cell; cells outside the region
/// are skipped but still consume their random draws, so the kept set is a
/// deterministic function of (grid, seed).
inline Ensemble build_ensemble(const FrontSolution& sol, Side side,
                               const GridSpec& grid, unsigned threads = 1) {
  if (grid.nx < 1 || grid.nv < 1) throw DomainError("grid needs nx, nv >= 1");
  if (!(grid.x_hi > grid.x_lo)) throw DomainError("empty x window");
  const double dx = grid.dx();
  const double dv = grid.dv();
  std::mt19937_64 rng(grid.seed);
  std::vector<std::pair<double, double>> seeds;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.nv; ++j) {
      const double x = grid.x_lo + (i + numerics::unit_uniform(rng)) * dx;
      const double v = (j + numerics::unit_uniform(rng)) * dv;
      if (v > 0.0 && v < 1.0 &&
          level_inside(side, v, sol.initial.value_at(x))) {
        seeds.emplace_back(x, v);
      }
    }
  }
  Ensemble ens;
  ens.side = side;
  ens.grid = grid;
  ens.horizon = sol.horizon;
  ens.curves = numerics::parallel_map<LagCurve>(
      seeds.size(), threads, [&](std::size_t i) {
        LagCurve c = evolve_curve(sol, seeds[i].first, seeds[i].second, side);
        c.id = static_cast<int>(i);
        c.weight = dx * dv;
        return c;
      });

  const double reach = sol.flux.s_max() * sol.horizon;
  // A side that clears the reach of the data only loses curves from the
  // undisturbed constant state; only the other side needs checking.
  const double lo = grid.x_lo <= sol.initial.support_min() - reach
                        ? -std::numeric_limits<double>::infinity()
                        : grid.x_lo;
  const double hi = grid.x_hi >= sol.initial.support_max() + reach
                        ? std::numeric_limits<double>::infinity()
                        : grid.x_hi;
  if (std::isfinite(lo) || std::isfinite(hi)) {
    for (const auto& c : ens.curves) {
      double te = 0.0;
      if (exits_window(c, lo, hi, &te)) {
        std::ostringstream os;
        os << "x window [" << grid.x_lo << ", " << grid.x_hi
           << "] too narrow: curve " << c.id << " (x0=" << c.x0()
           << ", v0=" << c.v0() << ") leaves it at t=" << te
           << "; need at least [" << sol.initial.support_min() - reach << ", "
           << sol.initial.support_max() + reach << "]";
        throw WindowError(os.str());
      }
    }
  }
  return ens;
}

struct Rect {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double v_lo = 0.0;
  double v_hi = 1.0;

  double perimeter() const { return 2.0 * ((x_hi - x_lo) + (v_hi - v_lo)); }
  bool contains(double x, double v) const {
    return x >= x_lo && x < x_hi && v >= v_lo && v < v_hi;
  }
};

/// Exact area of R intersected with the hypograph/epigraph of u(t, .).
inline double region_area(const FrontSolution& sol, Side side, double t,
                          const Rect& r) {
  const Epoch& ep = sol.epoch_at(t);
  double area = 0.0;
  double left = r.x_lo;
  for (std::size_t k = 0; k <= ep.fronts.size(); ++k) {
    const double right =
        k < ep.fronts.size() ? std::clamp(ep.fronts[k].x_at(t), r.x_lo, r.x_hi)
                             : r.x_hi;
    if (right > left) {
      const double u = ep.states[k];
      const double lo = side == Side::Hypograph ? 0.0 : u;
      const double hi = side == Side::Hypograph ? u : 1.0;
      const double h = std::max(0.0, std::min(hi, r.v_hi) - std::max(lo, r.v_lo));
      area += h * (right - left);
    }
    left = std::max(left, right);
  }
  return area;
}

inline double ensemble_mass_in(const Ensemble& ens, double t, const Rect& r) {
  double m = 0.0;
  for (const auto& c : ens.curves) {
    if (r.contains(c.x_at(t), c.v_at(t))) m += c.weight;
  }
  return m;
}

inline std::vector<double> pushforward_check(const Ensemble& ens,
                                             const FrontSolution& sol, double t,
                                             const std::vector<Rect>& rects) {
  std::vector<double> out;
  out.reserve(rects.size());
  for (const auto& r : rects) {
    out.push_back(std::abs(ensemble_mass_in(ens, t, r) -
                           region_area(sol, ens.side, t, r)));
  }
  return out;
}

/// n x n grid of rectangles tiling [x_lo, x_hi] x [0, 1].
inline std::vector<Rect> dyadic_rectangles(double x_lo, double x_hi, int n = 8) {
  std::vector<Rect> out;
  const double w = (x_hi - x_lo) / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.push_back({x_lo + i * w, x_lo + (i + 1) * w,
                     static_cast<double>(j) / n,
                     static_cast<double>(j + 1) / n});
    }
  }
  return out;
}

/// Weighted total variation of the levels over jumps located in the window.
inline double tv_dissipation(const Ensemble& ens, const Window& w) {
  double total = 0.0;
  for (const auto& c : ens.curves) {
    double tv = 0.0;
    for (const auto& j : c.jumps) {
      if (w.contains(j.t, j.x)) tv += j.size();
    }
    total += c.weight * tv;
  }
  return total;
}

struct JumpCounts {
  std::size_t bounce_left = 0;
  std::size_t bounce_right = 0;
  std::size_t sonic_flag = 0;
};

inline JumpCounts count_jumps(const Ensemble& ens) {
  JumpCounts n;
  for (const auto& c : ens.curves) {
    for (const auto& j : c.jumps) {
      switch (j.cause) {
        case JumpCause::BounceLeft:
          ++n.bounce_left;
          break;
        case JumpCause::BounceRight:
          ++n.bounce_right;
          break;
        case JumpCause::SonicFlag:
          ++n.sonic_flag;
          break;
      }
    }
  }
  return n;
}

/// Sorted union of two breakpoint lists, restricted to [t_lo, t_hi].
inline std::vector<double> merged_times(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        double t_lo, double t_hi) {
  std::vector<double> ts;
  ts.reserve(a.size() + b.size() + 2);
  for (double t : a) {
    if (t > t_lo && t < t_hi) ts.push_back(t);
  }
  for (double t : b) {
    if (t > t_lo && t < t_hi) ts.push_back(t);
  }
  ts.push_back(t_lo);
  ts.push_back(t_hi);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

/// True when `right` starts strictly right of `left` at some breakpoint and
/// is strictly left of it at a later one (beyond slack).
inline bool crosses_right_to_left(const LagCurve& left, const LagCurve& right,
                                  double slack = 1e-10) {
  const double t_lo = std::max(left.times.front(), right.times.front());
  const double t_hi = std::min(left.times.back(), right.times.back());
  if (t_lo > t_hi) return false;
  // Both curves are linear between consecutive merged breakpoints, so the
  // sign pattern of the gap is decided at those points. Walk them in order.
  std::size_t i = left.segment_at(t_lo);
  std::size_t j = right.segment_at(t_lo);
  auto at = [](const LagCurve& c, std::size_t k, double t) {
    const double t0 = c.times[k];
    const double t1 = c.times[k + 1];
    return c.xs[k] + (c.xs[k + 1] - c.xs[k]) * ((t - t0) / (t1 - t0));
  };
  bool was_right = false;
  double t = t_lo;
  while (true) {
    const double d = at(right, j, t) - at(left, i, t);
    if (d > slack) was_right = true;
    if (was_right && d < -slack) return true;
    if (t >= t_hi) return false;
    const double tn = std::min({left.times[i + 1], right.times[j + 1], t_hi});
    if (tn >= left.times[i + 1] && i + 2 < left.times.size()) ++i;
    if (tn >= right.times[j + 1] && j + 2 < right.times.size()) ++j;
    t = tn;
  }
}

struct NoCrossingReport {
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
};

/// Counts hypograph/epigraph pairs in which the epigraph curve passes from
/// the right of the hypograph curve to its left. n_pairs == 0 checks every
/// pair; otherwise pairs are sampled, each hypograph curve matched with a
/// random epigraph curve starting within 2 S T of it.
inline NoCrossingReport check_no_crossing(const Ensemble& hyp,
                                          const Ensemble& epi, double reach,
                                          std::size_t n_pairs = 10000,
                                          std::uint64_t seed = 1,
                                          double slack = 1e-10) {
  NoCrossingReport rep;
  if (hyp.curves.empty() || epi.curves.empty()) return rep;
  if (n_pairs == 0) {
    for (const auto& h : hyp.curves) {
      for (const auto& e : epi.curves) {
        ++rep.pairs_checked;
        if (crosses_right_to_left(h, e, slack)) ++rep.violations;
      }
    }
    return rep;
  }
  std::vector<std::size_t> order(epi.curves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return epi.curves[a].x0() < epi.curves[b].x0();
  });
  std::vector<double> x0s;
  for (std::size_t i : order) x0s.push_back(epi.curves[i].x0());
  std::mt19937_64 rng(seed);
  std::size_t attempts = 0;
  while (rep.pairs_checked < n_pairs && attempts < 20 * n_pairs) {
    ++attempts;
    const auto& h = hyp.curves[static_cast<std::size_t>(
        numerics::unit_uniform(rng) * static_cast<double>(hyp.curves.size()))];
    const auto lo = std::lower_bound(x0s.begin(), x0s.end(), h.x0() - 2 * reach);
    const auto hi = std::upper_bound(x0s.begin(), x0s.end(), h.x0() + 2 * reach);
    const auto span = static_cast<std::size_t>(hi - lo);
    if (span == 0) continue;
    const std::size_t pick =
        static_cast<std::size_t>(lo - x0s.begin()) +
        std::min(span - 1, static_cast<std::size_t>(numerics::unit_uniform(rng) *
                                                    static_cast<double>(span)));
    ++rep.pairs_checked;
    if (crosses_right_to_left(h, epi.curves[order[pick]], slack)) ++rep.violations;
  }
  return rep;
}

}  // namespace lagchar
