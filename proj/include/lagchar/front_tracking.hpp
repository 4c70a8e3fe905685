#pragma once

// Event-driven front tracking for piecewise-constant weak solutions.
//
// Between interaction events the front arrangement is fixed; each such time
// interval is stored as an Epoch holding the ordered fronts and the constant
// states between them. Everything downstream (Lagrangian curves, traces,
// barrier checks) reads the solution through the epochs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lagchar/errors.hpp"
#include "lagchar/flux_model.hpp"
#include "lagchar/numerics.hpp"
#include "lagchar/polyline.hpp"
#include "lagchar/test_function.hpp"

namespace lagchar {

inline constexpr double kCollisionTol = 1e-12;
inline constexpr double kDefaultMesh = 1.0 / 64.0;

enum class FrontKind { EntropicShock, RarefactionFront, NonEntropicShock };
enum class JumpMode { Entropic, NonEntropic };
enum class InteractionMode { Entropic, Preserve };

inline const char* to_string(FrontKind k) {
  switch (k) {
    case FrontKind::EntropicShock:
      return "entropic_shock";
    case FrontKind::RarefactionFront:
      return "rarefaction_front";
    case FrontKind::NonEntropicShock:
      return "non_entropic_shock";
  }
  return "?";
}

struct FrontTemplate {
  double u_left = 0.0;
  double u_right = 0.0;
  double speed = 0.0;
  FrontKind kind = FrontKind::EntropicShock;
};

inline std::vector<FrontTemplate> solve_riemann(const FluxModel& flux,
                                                double u_l, double u_r,
                                                JumpMode mode, double mesh) {
  require_unit(u_l, "u_l");
  require_unit(u_r, "u_r");
  if (!(mesh > 0.0)) throw DomainError("rarefaction mesh must be positive");
  if (std::abs(u_l - u_r) < kEqualStatesTol) return {};
  if (u_l > u_r) {
    return {{u_l, u_r, rh_speed(flux, u_l, u_r), FrontKind::EntropicShock}};
  }
  if (mode == JumpMode::NonEntropic) {
    return {{u_l, u_r, rh_speed(flux, u_l, u_r), FrontKind::NonEntropicShock}};
  }
  const double gap = u_r - u_l;
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::ceil(gap / mesh - 1e-9)));
  std::vector<FrontTemplate> fan;
  fan.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = u_l + gap * static_cast<double>(k) / static_cast<double>(n);
    const double b = k + 1 == n ? u_r
                                : u_l + gap * static_cast<double>(k + 1) /
                                            static_cast<double>(n);
    fan.push_back({a, b, rh_speed(flux, a, b), FrontKind::RarefactionFront});
  }
  return fan;
}

struct FrontSegment {
  int front_id = -1;
  double t_start = 0.0;
  double t_end = 0.0;
  double x_start = 0.0;
  double speed = 0.0;
  double u_left = 0.0;
  double u_right = 0.0;
  FrontKind kind = FrontKind::EntropicShock;

  double x_at(double t) const { return x_start + speed * (t - t_start); }
};

/// A front's life: a chain of constant-speed segments. States may change
/// between segments when the front absorbs others in a collision.
struct Front {
  int id = -1;
  std::vector<FrontSegment> segments;

  double birth() const { return segments.front().t_start; }
  double death() const { return segments.back().t_end; }
  FrontKind kind() const { return segments.front().kind; }
  double u_left() const { return segments.front().u_left; }
  double u_right() const { return segments.front().u_right; }

  PolyLine path() const {
    PolyLine p;
    for (const auto& s : segments) {
      p.append(s.t_start, s.x_start);
      p.append(s.t_end, s.x_at(s.t_end));
    }
    return p;
  }
};

struct InteractionEvent {
  double t = 0.0;
  double x = 0.0;
  std::vector<int> incoming;
  std::vector<int> outgoing;
  bool tie = false;
};

/// Interval [t_start, t_end) of fixed arrangement; states.size() ==
/// fronts.size() + 1, states[k] lies between fronts k-1 and k.
struct Epoch {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<FrontSegment> fronts;
  std::vector<double> states;

  // Number of fronts at or left of x at time t (right-continuous slab index).
  std::size_t slab_index(double t, double x) const {
    std::size_t k = 0;
    while (k < fronts.size() && fronts[k].x_at(t) <= x) ++k;
    return k;
  }
};

struct InitialJump {
  double x = 0.0;
  double u = 0.0;  // value to the right of x
  JumpMode mode = JumpMode::Entropic;
};

struct InitialData {
  double left = 0.0;  // value left of the first breakpoint
  std::vector<InitialJump> jumps;

  double value_at(double x) const {
    double u = left;
    for (const auto& j : jumps) {
      if (j.x <= x) u = j.u;
    }
    return u;
  }

  void validate() const {
    require_unit(left, "initial value");
    for (std::size_t i = 0; i < jumps.size(); ++i) {
      require_unit(jumps[i].u, "initial value");
      if (i > 0 && !(jumps[i].x > jumps[i - 1].x)) {
        throw DomainError("initial breakpoints must be strictly increasing");
      }
    }
  }

  double support_min() const { return jumps.empty() ? 0.0 : jumps.front().x; }
  double support_max() const { return jumps.empty() ? 0.0 : jumps.back().x; }
};

struct FrontSolution {
  FluxModel flux;
  InitialData initial;
  double horizon = 1.0;
  double mesh = kDefaultMesh;
  InteractionMode interaction = InteractionMode::Entropic;
  std::vector<Front> fronts;
  std::vector<InteractionEvent> events;
  std::vector<Epoch> epochs;
  std::vector<std::string> log;

  std::size_t epoch_index(double t) const {
    auto it = std::upper_bound(
        epochs.begin(), epochs.end(), t,
        [](double v, const Epoch& e) { return v < e.t_start; });
    if (it == epochs.begin()) return 0;
    return static_cast<std::size_t>(it - epochs.begin()) - 1;
  }
  const Epoch& epoch_at(double t) const { return epochs[epoch_index(t)]; }

  std::size_t segment_count() const {
    std::size_t n = 0;
    for (const auto& f : fronts) n += f.segments.size();
    return n;
  }

  // All front segments, in front-id order.
  std::vector<FrontSegment> all_segments() const {
    std::vector<FrontSegment> out;
    for (const auto& f : fronts) {
      out.insert(out.end(), f.segments.begin(), f.segments.end());
    }
    return out;
  }
};

namespace detail {

struct ActiveFront {
  int id;
  double seg_t0;
  double seg_x0;
  double speed;
  double u_left;
  double u_right;
  FrontKind kind;

  double x_at(double t) const { return seg_x0 + speed * (t - seg_t0); }
};

inline double collision_time(const ActiveFront& a, const ActiveFront& b,
                             double now) {
  const double closing = a.speed - b.speed;
  if (!(closing > 0.0)) return std::numeric_limits<double>::infinity();
  const double gap = b.x_at(now) - a.x_at(now);
  return now + std::max(0.0, gap) / closing;
}

}  // namespace detail

inline FrontSolution evolve(const FluxModel& flux, const InitialData& initial,
                            double horizon, double mesh = kDefaultMesh,
                            InteractionMode interaction = InteractionMode::Entropic) {
  initial.validate();
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  if (!(mesh > 0.0)) throw DomainError("rarefaction mesh must be positive");

  FrontSolution sol{flux, initial, horizon, mesh, interaction, {}, {}, {}, {}};
  std::vector<detail::ActiveFront> active;
  std::vector<double> states{initial.left};
  int next_id = 0;

  auto close_segment = [&](const detail::ActiveFront& a, double t) {
    if (static_cast<std::size_t>(a.id) >= sol.fronts.size()) {
      sol.fronts.resize(a.id + 1);
    }
    Front& f = sol.fronts[a.id];
    f.id = a.id;
    f.segments.push_back(
        {a.id, a.seg_t0, t, a.seg_x0, a.speed, a.u_left, a.u_right, a.kind});
  };

  double prev = initial.left;
  for (const auto& j : initial.jumps) {
    for (const auto& tpl : solve_riemann(flux, prev, j.u, j.mode, mesh)) {
      active.push_back({next_id++, 0.0, j.x, tpl.speed, tpl.u_left, tpl.u_right,
                        tpl.kind});
      states.push_back(tpl.u_right);
    }
    prev = j.u;
  }

  double now = 0.0;
  const std::size_t max_events = 1000000;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_events) throw Error("evolve: event limit exceeded");

    std::vector<double> tc(active.size() > 0 ? active.size() - 1 : 0);
    double t_next = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < active.size(); ++i) {
      tc[i] = detail::collision_time(active[i], active[i + 1], now);
      t_next = std::min(t_next, tc[i]);
    }
    const double t_end = std::min(t_next, horizon);

    Epoch ep;
    ep.t_start = now;
    ep.t_end = t_end;
    ep.states = states;
    for (const auto& a : active) {
      ep.fronts.push_back({a.id, now, t_end, a.x_at(now), a.speed, a.u_left,
                           a.u_right, a.kind});
    }
    if (t_end > now || sol.epochs.empty()) {
      sol.epochs.push_back(std::move(ep));
    }
    if (t_next >= horizon) {
      for (const auto& a : active) close_segment(a, horizon);
      break;
    }
    now = t_next;

    // Maximal runs of adjacent pairs colliding within the tolerance.
    std::vector<std::pair<std::size_t, std::size_t>> clusters;
    for (std::size_t i = 0; i < tc.size(); ++i) {
      if (tc[i] > t_next + kCollisionTol) continue;
      if (!clusters.empty() && clusters.back().second == i) {
        clusters.back().second = i + 1;
      } else {
        clusters.push_back({i, i + 1});
      }
    }
    const bool tie = clusters.size() > 1 ||
                     (clusters.size() == 1 &&
                      clusters[0].second - clusters[0].first > 1);
    if (tie) {
      std::ostringstream os;
      os << "t=" << now << ": simultaneous collision of "
         << clusters.size() << " group(s), resolved leftmost first";
      sol.log.push_back(os.str());
    }

    // Resolve right to left so earlier indices stay valid; events are
    // recorded left to right.
    std::vector<InteractionEvent> batch;
    for (auto c = clusters.rbegin(); c != clusters.rend(); ++c) {
      const std::size_t a = c->first;
      const std::size_t b = c->second;
      InteractionEvent ev;
      ev.t = now;
      ev.tie = tie;
      double xsum = 0.0;
      bool has_nonentropic = false;
      for (std::size_t k = a; k <= b; ++k) {
        ev.incoming.push_back(active[k].id);
        xsum += active[k].x_at(now);
        has_nonentropic |= active[k].kind == FrontKind::NonEntropicShock;
        close_segment(active[k], now);
      }
      ev.x = xsum / static_cast<double>(b - a + 1);
      const double ul = states[a];
      const double ur = states[b + 1];

      std::vector<FrontTemplate> out;
      if (interaction == InteractionMode::Preserve && has_nonentropic) {
        out = solve_riemann(flux, ul, ur, JumpMode::NonEntropic, mesh);
      } else {
        out = solve_riemann(flux, ul, ur, JumpMode::Entropic, mesh);
      }

      std::vector<detail::ActiveFront> fresh;
      std::vector<double> fresh_states;
      for (std::size_t k = 0; k < out.size(); ++k) {
        const int id = out.size() == 1 ? active[a].id : next_id++;
        fresh.push_back({id, now, ev.x, out[k].speed, out[k].u_left,
                         out[k].u_right, out[k].kind});
        ev.outgoing.push_back(id);
        if (k + 1 < out.size()) fresh_states.push_back(out[k].u_right);
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(a),
                   active.begin() + static_cast<std::ptrdiff_t>(b + 1));
      active.insert(active.begin() + static_cast<std::ptrdiff_t>(a),
                    fresh.begin(), fresh.end());
      // states[a] and states[b+1] survive; interior states are replaced.
      states.erase(states.begin() + static_cast<std::ptrdiff_t>(a + 1),
                   states.begin() + static_cast<std::ptrdiff_t>(b + 1));
      states.insert(states.begin() + static_cast<std::ptrdiff_t>(a + 1),
                    fresh_states.begin(), fresh_states.end());
      if (fresh.empty()) {
        // Cancellation: the two outer states coincide and merge.
        states.erase(states.begin() + static_cast<std::ptrdiff_t>(a + 1));
      }
      batch.push_back(std::move(ev));
    }
    sol.events.insert(sol.events.end(), batch.rbegin(), batch.rend());
  }
  return sol;
}

/// u(t, x), right-continuous across fronts.
inline double sample(const FrontSolution& sol, double t, double x) {
  const Epoch& ep = sol.epoch_at(t);
  return ep.states[ep.slab_index(t, x)];
}

struct Trace {
  double u_minus = 0.0;
  double u_plus = 0.0;
};

/// One-sided limits of u(t, .) at x. Fronts within tol of x count as
/// sitting at x.
inline Trace trace(const FrontSolution& sol, double t, double x,
                   double tol = 1e-12) {
  const Epoch& ep = sol.epoch_at(t);
  std::size_t lo = 0;
  while (lo < ep.fronts.size() && ep.fronts[lo].x_at(t) < x - tol) ++lo;
  std::size_t hi = lo;
  while (hi < ep.fronts.size() && ep.fronts[hi].x_at(t) <= x + tol) ++hi;
  return {ep.states[lo], ep.states[hi]};
}

inline Trace trace(const FrontSolution& sol, const PolyLine& s, double t,
                   double tol = 1e-12) {
  return trace(sol, t, s(t), tol);
}

/// Rate sigma [eta] - [q] for one front segment.
inline double segment_dissipation_rate(const FrontSegment& seg,
                                       const EntropyPair& pair) {
  return seg.speed * (pair.eta(seg.u_left) - pair.eta(seg.u_right)) -
         (pair.q(seg.u_left) - pair.q(seg.u_right));
}

struct Window {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double x_lo = -std::numeric_limits<double>::infinity();
  double x_hi = std::numeric_limits<double>::infinity();

  bool contains(double t, double x) const {
    return t >= t_lo && t <= t_hi && x >= x_lo && x <= x_hi;
  }
};

// Sub-interval of [t0, t1] during which x0 + c (t - t0) stays in [x_lo, x_hi].
inline std::pair<double, double> time_in_band(double t0, double t1, double x0,
                                              double c, double x_lo,
                                              double x_hi) {
  double a = t0;
  double b = t1;
  if (c == 0.0) {
    if (x0 < x_lo || x0 > x_hi) return {t0, t0};
    return {a, b};
  }
  double ta = t0 + (x_lo - x0) / c;
  double tb = t0 + (x_hi - x0) / c;
  if (ta > tb) std::swap(ta, tb);
  a = std::max(a, ta);
  b = std::min(b, tb);
  if (b < a) return {a, a};
  return {a, b};
}

/// mu_eta of the window: sum over front segments of rate times the time the
/// segment spends inside the window.
inline double entropy_production(const FrontSolution& sol,
                                 const EntropyPair& pair, const Window& w) {
  double total = 0.0;
  for (const auto& f : sol.fronts) {
    for (const auto& seg : f.segments) {
      const double t0 = std::max(seg.t_start, w.t_lo);
      const double t1 = std::min(seg.t_end, w.t_hi);
      if (!(t1 > t0)) continue;
      const auto [a, b] = time_in_band(t0, t1, seg.x_at(t0), seg.speed,
                                       w.x_lo, w.x_hi);
      if (b > a) total += segment_dissipation_rate(seg, pair) * (b - a);
    }
  }
  return total;
}

/// int int (u Phi_t + f(u) Phi_x) dx dt + int u0 Phi(0, x) dx for a
/// tensor-product Phi. The x-integrals are exact; the t-integral is
/// piecewise adaptive Simpson split at epochs and bump knots.
inline double weak_form_residual(const FrontSolution& sol,
                                 const TestFunction& phi, double tol = 1e-11) {
  const PlateauBump& bt = phi.in_t;
  const PlateauBump& bx = phi.in_x;
  auto inner = [&](double t) {
    const Epoch& ep = sol.epoch_at(t);
    double iu = 0.0;
    double ifu = 0.0;
    double left = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= ep.fronts.size(); ++k) {
      const double right = k < ep.fronts.size()
                               ? ep.fronts[k].x_at(t)
                               : std::numeric_limits<double>::infinity();
      const double a = std::max(left, bx.support_lo());
      const double b = std::min(right, bx.support_hi());
      if (b > a) {
        const double u = ep.states[k];
        iu += u * bx.integral(a, b);
        ifu += sol.flux.f(u) * (bx(b) - bx(a));
      }
      left = std::max(left, right);
    }
    return bt.derivative(t) * iu + bt(t) * ifu;
  };
  std::vector<double> breaks = bt.knots();
  for (const auto& ep : sol.epochs) breaks.push_back(ep.t_start);
  const double t_lo = std::max(0.0, bt.support_lo());
  const double t_hi = std::min(sol.horizon, bt.support_hi());
  double total = 0.0;
  if (t_hi > t_lo) {
    const auto br = numerics::clean_breaks(breaks, t_lo, t_hi);
    total = numerics::integrate_piecewise(inner, br, tol);
  }
  // Initial-data term.
  if (bt(0.0) != 0.0) {
    double init = 0.0;
    double left = -std::numeric_limits<double>::infinity();
    double u = sol.initial.left;
    for (std::size_t k = 0; k <= sol.initial.jumps.size(); ++k) {
      const double right = k < sol.initial.jumps.size()
                               ? sol.initial.jumps[k].x
                               : std::numeric_limits<double>::infinity();
      const double a = std::max(left, bx.support_lo());
      const double b = std::min(right, bx.support_hi());
      if (b > a) init += u * bx.integral(a, b);
      if (k < sol.initial.jumps.size()) u = sol.initial.jumps[k].u;
      left = right;
    }
    total += bt(0.0) * init;
  }
  return total;
}

}  // namespace lagchar
