#pragma once

// Entropy flux across a curve Sigma = {x = s(t)}: the Lagrangian side built
// from classified curve/Sigma intersections, the Eulerian trace integral, and
// the mollified strip integral that connects them.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "lagchar/errors.hpp"
#include "lagchar/flux_model.hpp"
#include "lagchar/front_tracking.hpp"
#include "lagchar/lagrangian.hpp"
#include "lagchar/numerics.hpp"
#include "lagchar/polyline.hpp"
#include "lagchar/test_function.hpp"

namespace lagchar {

inline constexpr double kSurfaceZeroTol = 1e-10;

/// Graph x = s(t) on [t_a, t_b]. Sigma+ is the side x > s(t).
struct Surface {
  PolyLine s;

  Surface() = default;
  explicit Surface(PolyLine path) : s(std::move(path)) { s.validate(); }

  static Surface vertical(double x, double t_a, double t_b) {
    return Surface(PolyLine({t_a, t_b}, {x, x}));
  }

  double t_a() const { return s.t_begin(); }
  double t_b() const { return s.t_end(); }
  double operator()(double t) const { return s(t); }
  double lipschitz_bound() const { return s.lipschitz(); }

  // Unit normal (nu_t, nu_x) pointing into Sigma+.
  std::pair<double, double> normal(double t) const {
    const double d = s.derivative(t);
    const double n = std::sqrt(1.0 + d * d);
    return {-d / n, 1.0 / n};
  }

  // Mirror image x -> -x; with a mirrored solution this swaps Sigma+ and Sigma-.
  Surface negated() const {
    std::vector<double> xs = s.xs;
    for (double& x : xs) x = -x;
    return Surface(PolyLine(s.ts, xs));
  }
};

enum class CrossingClass { Iplus, Iminus, Bminus, Bplus };

inline const char* to_string(CrossingClass c) {
  switch (c) {
    case CrossingClass::Iplus:
      return "I+";
    case CrossingClass::Iminus:
      return "I-";
    case CrossingClass::Bminus:
      return "B-";
    case CrossingClass::Bplus:
      return "B+";
  }
  return "?";
}

/// An intersection event. Transversal crossings have t_enter == t_exit; a
/// run of contact with Sigma is collapsed to one record spanning it.
struct CrossingRecord {
  CrossingClass cls = CrossingClass::Iplus;
  double t_enter = 0.0;
  double t_exit = 0.0;
  double x_enter = 0.0;
  double x_exit = 0.0;
  double v_minus = 0.0;
  double v_plus = 0.0;

  double t() const { return t_enter; }
  double x() const { return x_enter; }
};

struct Classification {
  std::vector<CrossingRecord> records;
  std::size_t excluded_endpoint = 0;
};

namespace detail {

// Level on the segment ending at t (left limit).
inline double level_left(const LagCurve& c, double t) {
  if (t <= c.times.front()) return c.vs.front();
  auto it = std::lower_bound(c.times.begin(), c.times.end(), t);
  const auto i = static_cast<std::size_t>(it - c.times.begin());
  return c.vs[std::min(i, c.vs.size()) - 1];
}

inline double level_right(const LagCurve& c, double t) { return c.v_at(t); }

struct Sampled {
  std::vector<double> ts;
  std::vector<double> d;  // gamma_x - s
};

inline Sampled sample_gap(const LagCurve& c, const Surface& sigma) {
  Sampled out;
  const double lo = std::max(sigma.t_a(), c.times.front());
  const double hi = std::min(sigma.t_b(), c.times.back());
  if (!(hi > lo)) return out;
  out.ts = merged_times(c.times, sigma.s.ts, lo, hi);
  out.d.reserve(out.ts.size());
  for (double t : out.ts) out.d.push_back(c.x_at(t) - sigma(t));
  return out;
}

inline int sign_of(double d, double tol) {
  if (d > tol) return 1;
  if (d < -tol) return -1;
  return 0;
}

inline double linear_root(double t0, double t1, double d0, double d1) {
  return t0 + (t1 - t0) * d0 / (d0 - d1);
}

}  // namespace detail

inline Classification classify_intersections(const LagCurve& curve,
                                             const Surface& sigma,
                                             double zero_tol = kSurfaceZeroTol) {
  Classification out;
  const auto g = detail::sample_gap(curve, sigma);
  const std::size_t n = g.ts.size();
  if (n < 2) return out;
  std::vector<int> sg(n);
  for (std::size_t i = 0; i < n; ++i) sg[i] = detail::sign_of(g.d[i], zero_tol);

  std::size_t i = 0;
  while (i < n) {
    if (sg[i] == 0) {
      std::size_t j = i;
      while (j + 1 < n && sg[j + 1] == 0) ++j;
      if (i == 0 || j == n - 1) {
        ++out.excluded_endpoint;
      } else {
        const int in = sg[i - 1];
        const int outs = sg[j + 1];
        CrossingRecord r;
        r.cls = in < 0 ? (outs > 0 ? CrossingClass::Iplus : CrossingClass::Bminus)
                       : (outs < 0 ? CrossingClass::Iminus : CrossingClass::Bplus);
        r.t_enter = g.ts[i];
        r.t_exit = g.ts[j];
        r.x_enter = curve.x_at(r.t_enter);
        r.x_exit = curve.x_at(r.t_exit);
        r.v_minus = detail::level_left(curve, r.t_enter);
        r.v_plus = detail::level_right(curve, r.t_exit);
        out.records.push_back(r);
      }
      i = j + 1;
      continue;
    }
    if (i + 1 < n && sg[i + 1] != 0 && sg[i + 1] != sg[i]) {
      const double tc = detail::linear_root(g.ts[i], g.ts[i + 1], g.d[i], g.d[i + 1]);
      CrossingRecord r;
      r.cls = sg[i] < 0 ? CrossingClass::Iplus : CrossingClass::Iminus;
      r.t_enter = r.t_exit = tc;
      r.x_enter = r.x_exit = curve.x_at(tc);
      // No curve breakpoint lies strictly inside a merged interval.
      r.v_minus = r.v_plus = curve.vs[curve.segment_at(0.5 * (g.ts[i] + g.ts[i + 1]))];
      out.records.push_back(r);
    }
    ++i;
  }
  return out;
}

/// <F_gamma^-, eta (x) Phi> from the classified records.
inline double curve_flux_pairing(const std::vector<CrossingRecord>& records,
                                 const EntropyPair& pair,
                                 const TestFunction& phi) {
  double total = 0.0;
  for (const auto& r : records) {
    switch (r.cls) {
      case CrossingClass::Iplus:
        total += pair.deta(r.v_minus) * phi(r.t_enter, r.x_enter);
        break;
      case CrossingClass::Iminus:
        total -= pair.deta(r.v_plus) * phi(r.t_exit, r.x_exit);
        break;
      case CrossingClass::Bminus:
        total += pair.deta(r.v_minus) * phi(r.t_enter, r.x_enter) -
                 pair.deta(r.v_plus) * phi(r.t_exit, r.x_exit);
        break;
      case CrossingClass::Bplus:
        break;
    }
  }
  return total;
}

/// Same pairing computed as -int psi d(theta), with theta the indicator of
/// the closed side {x >= s(t)} and psi = eta'(gamma_v) Phi(t, gamma_x).
/// Built from the components of {theta = 1} instead of event records.
inline double theta_psi_pairing(const LagCurve& curve, const Surface& sigma,
                                const EntropyPair& pair, const TestFunction& phi,
                                double zero_tol = kSurfaceZeroTol) {
  const auto g = detail::sample_gap(curve, sigma);
  const std::size_t n = g.ts.size();
  if (n < 2) return 0.0;
  auto nonneg = [&](std::size_t i) { return g.d[i] >= -zero_tol; };
  auto strict = [&](std::size_t i) { return g.d[i] > zero_tol; };
  // Components of {d >= 0}; first/last are node indices, has_positive marks
  // components that leave the contact set into Sigma+.
  struct Comp {
    double a, b;
    std::size_t first, last;
    bool has_positive;
  };
  std::vector<Comp> comps;
  bool open = false;
  Comp cur{};
  auto begin_at = [&](double t, std::size_t i) {
    open = true;
    cur = {t, t, i, i, strict(i)};
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      if (nonneg(0)) begin_at(g.ts[0], 0);
      continue;
    }
    const bool a = nonneg(i - 1);
    const bool b = nonneg(i);
    if (a && b) {
      cur.last = i;
      cur.has_positive = cur.has_positive || strict(i);
    } else if (a) {
      cur.b = strict(i - 1)
                  ? detail::linear_root(g.ts[i - 1], g.ts[i], g.d[i - 1], g.d[i])
                  : g.ts[i - 1];
      comps.push_back(cur);
      open = false;
    } else if (b) {
      begin_at(strict(i) ? detail::linear_root(g.ts[i - 1], g.ts[i], g.d[i - 1],
                                               g.d[i])
                         : g.ts[i],
               i);
    }
  }
  if (open) {
    cur.b = g.ts[n - 1];
    comps.push_back(cur);
  }

  auto psi_left = [&](double t) {
    return pair.deta(detail::level_left(curve, t)) * phi(t, curve.x_at(t));
  };
  auto psi_right = [&](double t) {
    return pair.deta(detail::level_right(curve, t)) * phi(t, curve.x_at(t));
  };
  double total = 0.0;
  for (const auto& c : comps) {
    const bool at_start = c.first == 0;
    const bool at_end = c.last == n - 1;
    // Contact runs touching the ends of Sigma are left out, as in the records.
    const bool entry = !at_start && !(at_end && !c.has_positive && !strict(n - 1));
    const bool exit = !at_end && !(at_start && !c.has_positive && !strict(0));
    if (entry) total += psi_left(c.a);
    if (exit) total -= psi_right(c.b);
  }
  return total;
}

struct FluxBreakdown {
  double total = 0.0;
  double iplus = 0.0;
  double iminus = 0.0;
  double bminus = 0.0;
  std::size_t n_iplus = 0;
  std::size_t n_iminus = 0;
  std::size_t n_bminus = 0;
  std::size_t n_bplus = 0;
  std::size_t excluded_endpoint = 0;
};

inline void require_anchor(Side side, const EntropyPair& pair) {
  const Anchor want = side == Side::Hypograph ? Anchor::ZeroAtZero : Anchor::ZeroAtOne;
  if (pair.anchor != want) {
    std::ostringstream os;
    os << to_string(side) << " ensembles need a " << to_string(want)
       << " entropy pair, got " << to_string(pair.anchor);
    throw AnchorError(os.str());
  }
}

/// Weighted sum over curves (id order) of the pairing; negated for the
/// epigraph.
inline FluxBreakdown lagrangian_flux(const Ensemble& ens, const Surface& sigma,
                                     const EntropyPair& pair,
                                     const TestFunction& phi,
                                     unsigned threads = 1) {
  require_anchor(ens.side, pair);
  const auto per_curve = numerics::parallel_map<FluxBreakdown>(
      ens.curves.size(), threads, [&](std::size_t i) {
        const auto& c = ens.curves[i];
        const auto cls = classify_intersections(c, sigma);
        FluxBreakdown b;
        b.excluded_endpoint = cls.excluded_endpoint;
        for (const auto& r : cls.records) {
          const double v = curve_flux_pairing({r}, pair, phi) * c.weight;
          switch (r.cls) {
            case CrossingClass::Iplus:
              b.iplus += v;
              ++b.n_iplus;
              break;
            case CrossingClass::Iminus:
              b.iminus += v;
              ++b.n_iminus;
              break;
            case CrossingClass::Bminus:
              b.bminus += v;
              ++b.n_bminus;
              break;
            case CrossingClass::Bplus:
              ++b.n_bplus;
              break;
          }
        }
        return b;
      });
  FluxBreakdown out;
  for (const auto& b : per_curve) {
    out.iplus += b.iplus;
    out.iminus += b.iminus;
    out.bminus += b.bminus;
    out.n_iplus += b.n_iplus;
    out.n_iminus += b.n_iminus;
    out.n_bminus += b.n_bminus;
    out.n_bplus += b.n_bplus;
    out.excluded_endpoint += b.excluded_endpoint;
  }
  const double sign = ens.side == Side::Hypograph ? 1.0 : -1.0;
  out.iplus *= sign;
  out.iminus *= sign;
  out.bminus *= sign;
  out.total = out.iplus + out.iminus + out.bminus;
  return out;
}

namespace detail {

// Times in [t_a, t_b] where some front, or a shifted copy of Sigma, meets
// the curve x = s(t) + offset.
inline void add_front_crossings(const FrontSolution& sol, const Surface& sigma,
                                double offset, std::vector<double>& out) {
  for (const auto& ep : sol.epochs) {
    const double e0 = std::max(ep.t_start, sigma.t_a());
    const double e1 = std::min(ep.t_end, sigma.t_b());
    if (!(e1 > e0)) continue;
    for (std::size_t j = 0; j + 1 < sigma.s.ts.size(); ++j) {
      const double a = std::max(e0, sigma.s.ts[j]);
      const double b = std::min(e1, sigma.s.ts[j + 1]);
      if (!(b > a)) continue;
      const double ss = sigma.s.slope(j);
      for (const auto& f : ep.fronts) {
        const double da = f.x_at(a) - (sigma(a) + offset);
        const double db = f.x_at(b) - (sigma(b) + offset);
        if ((da < 0.0) != (db < 0.0) && f.speed != ss) {
          out.push_back(linear_root(a, b, da, db));
        }
      }
    }
  }
}

inline std::vector<double> surface_breaks(const FrontSolution& sol,
                                          const Surface& sigma,
                                          const TestFunction& phi,
                                          std::initializer_list<double> offsets) {
  std::vector<double> br = sigma.s.ts;
  for (double k : phi.in_t.knots()) br.push_back(k);
  for (const auto& ep : sol.epochs) br.push_back(ep.t_start);
  for (double off : offsets) {
    add_front_crossings(sol, sigma, off, br);
    // Times at which s(t) + off passes an x-knot of Phi.
    for (double xk : phi.in_x.knots()) {
      for (std::size_t j = 0; j + 1 < sigma.s.ts.size(); ++j) {
        const double d0 = sigma.s.xs[j] + off - xk;
        const double d1 = sigma.s.xs[j + 1] + off - xk;
        if ((d0 < 0.0) != (d1 < 0.0)) {
          br.push_back(linear_root(sigma.s.ts[j], sigma.s.ts[j + 1], d0, d1));
        }
      }
    }
  }
  return numerics::clean_breaks(std::move(br), sigma.t_a(), sigma.t_b());
}

}  // namespace detail

/// int_Sigma [-s' eta(u^-) + q(u^-)] Phi(t, s(t)) dt.
inline double trace_flux(const FrontSolution& sol, const Surface& sigma,
                         const EntropyPair& pair, const TestFunction& phi,
                         double tol = 1e-9, double coincide_tol = 1e-9) {
  const auto br = detail::surface_breaks(sol, sigma, phi, {0.0});
  // Evaluate each panel at interior points only so that the one-sided trace
  // is read away from the split times.
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double a = br[i];
    const double b = br[i + 1];
    if (!(b > a)) continue;
    const double tm = 0.5 * (a + b);
    const double sp = sigma.s.derivative(tm);
    const double um = trace(sol, tm, sigma(tm), coincide_tol).u_minus;
    const double w = -sp * pair.eta(um) + pair.q(um);
    if (w == 0.0) continue;
    total += w * numerics::adaptive_simpson(
                     [&](double t) { return phi(t, sigma(t)); }, a, b,
                     tol * (b - a) / (sigma.t_b() - sigma.t_a()));
  }
  return total;
}

/// (1/delta) int int_{s-delta}^{s} [-s' eta(u) + q(u)] Phi dx dt: the strip
/// form obtained with the ramp G = clamp(1 + (x - s)/delta, 0, 1).
inline double mollified_flux(const FrontSolution& sol, const Surface& sigma,
                             const EntropyPair& pair, const TestFunction& phi,
                             double delta, double tol = 1e-10) {
  if (!(delta > 0.0)) throw DomainError("mollified_flux: delta must be positive");
  const double t_lo = std::max(sigma.t_a(), phi.t_lo());
  const double t_hi = std::min(sigma.t_b(), phi.t_hi());
  double room = std::numeric_limits<double>::infinity();
  std::vector<double> probe = sigma.s.ts;
  probe.push_back(t_lo);
  probe.push_back(t_hi);
  for (double t : probe) {
    if (t >= t_lo && t <= t_hi) room = std::min(room, sigma(t) - phi.x_lo());
  }
  if (delta >= room) {
    std::ostringstream os;
    os << "mollified_flux: delta " << delta
       << " too large, the ramp leaves the test-function support (room "
       << room << ")";
    throw DomainError(os.str());
  }
  auto inner = [&](double t) {
    const double phit = phi.in_t(t);
    if (phit == 0.0) return 0.0;
    const Epoch& ep = sol.epoch_at(t);
    const double sp = sigma.s.derivative(t);
    const double hi = sigma(t);
    const double lo = hi - delta;
    double acc = 0.0;
    double left = lo;
    for (std::size_t k = 0; k <= ep.fronts.size(); ++k) {
      const double right =
          k < ep.fronts.size() ? std::clamp(ep.fronts[k].x_at(t), lo, hi) : hi;
      if (right > left) {
        const double u = ep.states[k];
        acc += (-sp * pair.eta(u) + pair.q(u)) * phi.in_x.integral(left, right);
      }
      left = std::max(left, right);
    }
    return phit * acc / delta;
  };
  const auto br = detail::surface_breaks(sol, sigma, phi, {0.0, -delta});
  return numerics::integrate_piecewise(inner, br, tol);
}

struct IntersectionStats {
  std::size_t max_count = 0;
  std::map<std::size_t, std::size_t> histogram;
  std::vector<double> epsilons;
  std::vector<double> tangency_mass;
  double fitted_c = 0.0;
  double r_squared = 0.0;
  bool nonincreasing = true;
};

/// Per-curve intersection counts and the weight of curves running nearly
/// parallel to Sigma (slope within eps of s') while within eps of it.
inline IntersectionStats intersection_statistics(const Ensemble& ens,
                                                 const Surface& sigma,
                                                 std::vector<double> epsilons,
                                                 unsigned threads = 1) {
  IntersectionStats st;
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  st.epsilons = epsilons;
  struct PerCurve {
    std::size_t count = 0;
    std::vector<char> near;
  };
  const auto pcs = numerics::parallel_map<PerCurve>(
      ens.curves.size(), threads, [&](std::size_t i) {
        const auto& c = ens.curves[i];
        PerCurve pc;
        const auto cls = classify_intersections(c, sigma);
        pc.count = cls.records.size() + cls.excluded_endpoint;
        pc.near.assign(epsilons.size(), 0);
        const auto g = detail::sample_gap(c, sigma);
        for (std::size_t k = 0; k + 1 < g.ts.size(); ++k) {
          const double tm = 0.5 * (g.ts[k] + g.ts[k + 1]);
          const double rel = std::abs(c.slope(c.segment_at(tm)) - sigma.s.derivative(tm));
          const double dmin = (g.d[k] < 0.0) != (g.d[k + 1] < 0.0)
                                  ? 0.0
                                  : std::min(std::abs(g.d[k]), std::abs(g.d[k + 1]));
          for (std::size_t e = 0; e < epsilons.size(); ++e) {
            if (rel <= epsilons[e] && dmin <= epsilons[e]) pc.near[e] = 1;
          }
        }
        return pc;
      });
  st.tangency_mass.assign(epsilons.size(), 0.0);
  for (std::size_t i = 0; i < pcs.size(); ++i) {
    st.max_count = std::max(st.max_count, pcs[i].count);
    ++st.histogram[pcs[i].count];
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      if (pcs[i].near[e]) st.tangency_mass[e] += ens.curves[i].weight;
    }
  }
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    if (epsilons[e] > 0.0) {
      st.fitted_c = std::max(st.fitted_c, st.tangency_mass[e] / epsilons[e]);
    }
    if (e > 0 && st.tangency_mass[e] > st.tangency_mass[e - 1]) st.nonincreasing = false;
  }
  st.r_squared = numerics::fit_line(st.epsilons, st.tangency_mass).r_squared;
  return st;
}

}  // namespace lagchar
