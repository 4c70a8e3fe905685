#pragma once

// Convex flux functions, entropy/entropy-flux pairs and the algebra local to
// a single jump: Rankine-Hugoniot speed, sonic level, and the level bounce
// map used by the Lagrangian curves.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lagchar/errors.hpp"
#include "lagchar/numerics.hpp"

namespace lagchar {

using ScalarFn = std::function<double(double)>;

// Width of the states treated as equal by rh_speed.
inline constexpr double kEqualStatesTol = 1e-14;
// Grid size for the sampled convexity check on [0, 1].
inline constexpr int kConvexitySamples = 2001;

/// Uniformly convex flux on the value slab [0, 1].
///
/// Polynomial fluxes are evaluated by Horner's rule and carry an exact
/// primitive and Taylor expansion; generic fluxes wrap user callables.
class FluxModel {
 public:
  static FluxModel polynomial(std::vector<double> coeffs,
                              std::string name = "polynomial") {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    FluxModel m;
    m.coeffs_ = std::move(coeffs);
    m.name_ = std::move(name);
    m.validate();
    return m;
  }

  static FluxModel burgers() { return polynomial({0.0, 0.0, 0.5}, "burgers"); }

  static FluxModel from_functions(ScalarFn f, ScalarFn df, ScalarFn ddf,
                                  std::string name = "custom") {
    FluxModel m;
    m.f_ = std::move(f);
    m.df_ = std::move(df);
    m.ddf_ = std::move(ddf);
    m.name_ = std::move(name);
    m.validate();
    return m;
  }

  double f(double u) const { return is_polynomial() ? horner(coeffs_, u) : f_(u); }
  double df(double u) const {
    return is_polynomial() ? horner_derivative(coeffs_, u, 1) : df_(u);
  }
  double ddf(double u) const {
    return is_polynomial() ? horner_derivative(coeffs_, u, 2) : ddf_(u);
  }

  double alpha() const { return alpha_; }
  double s_max() const { return s_max_; }
  const std::string& name() const { return name_; }
  bool is_polynomial() const { return !coeffs_.empty(); }
  const std::vector<double>& coeffs() const { return coeffs_; }

  // Antiderivative of f vanishing at 0 (polynomial fluxes only).
  double primitive(double u) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) {
      acc = acc * u + coeffs_[k] / static_cast<double>(k + 1);
    }
    return acc * u;
  }

  // Coefficients of f(at + h) in powers of h (polynomial fluxes only).
  std::vector<double> taylor(double at) const {
    std::vector<double> c = coeffs_;
    const std::size_t n = c.size();
    // Repeated synthetic division by (u - at).
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = n - 1; j > k; --j) c[j - 1] += at * c[j];
    }
    return c;
  }

  /// Flux for w = (u - lo) / (hi - lo), i.e. g(w) = f(lo + (hi - lo) w) / (hi - lo).
  FluxModel rescaled(double lo, double hi) const {
    if (!is_polynomial()) {
      throw DomainError("only polynomial fluxes can be rescaled");
    }
    if (!(hi > lo)) throw DomainError("rescale needs hi > lo");
    const double scale = hi - lo;
    std::vector<double> c = taylor(lo);
    double p = 1.0;
    for (double& ck : c) {
      ck *= p / scale;
      p *= scale;
    }
    return polynomial(std::move(c), name_ + "(rescaled)");
  }

  std::string describe() const {
    std::ostringstream os;
    os << name_;
    if (is_polynomial()) {
      os << " [";
      for (std::size_t k = 0; k < coeffs_.size(); ++k) {
        os << (k ? ", " : "") << coeffs_[k];
      }
      os << "]";
    }
    return os.str();
  }

 private:
  FluxModel() = default;

  static double horner(const std::vector<double>& c, double u) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * u + c[k];
    return acc;
  }

  static double horner_derivative(const std::vector<double>& c, double u,
                                  int order) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > static_cast<std::size_t>(order);) {
      double factor = 1.0;
      for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - j);
      acc = acc * u + factor * c[k];
    }
    return acc;
  }

  void validate() {
    alpha_ = std::numeric_limits<double>::infinity();
    s_max_ = 0.0;
    double prev_df = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kConvexitySamples; ++i) {
      const double u = static_cast<double>(i) / (kConvexitySamples - 1);
      const double dd = ddf(u);
      const double d = df(u);
      if (!std::isfinite(dd) || !std::isfinite(d)) {
        throw ConvexityError("flux " + name_ + " is not finite on [0,1]");
      }
      alpha_ = std::min(alpha_, dd);
      s_max_ = std::max(s_max_, std::abs(d));
      if (!(d > prev_df)) {
        throw ConvexityError("flux " + name_ + ": f' not strictly increasing");
      }
      prev_df = d;
    }
    if (!(alpha_ > 0.0)) {
      std::ostringstream os;
      os << "flux " << name_ << " is not uniformly convex on [0,1] (min f'' = "
         << alpha_ << ")";
      throw ConvexityError(os.str());
    }
  }

  std::vector<double> coeffs_;
  ScalarFn f_, df_, ddf_;
  double alpha_ = 0.0;
  double s_max_ = 0.0;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Shock algebra

inline void require_unit(double u, const char* what) {
  if (!(u >= 0.0 && u <= 1.0)) {
    std::ostringstream os;
    os << what << " = " << u << " outside [0,1]";
    throw DomainError(os.str());
  }
}

inline double rh_speed(const FluxModel& flux, double u_l, double u_r) {
  require_unit(u_l, "u_l");
  require_unit(u_r, "u_r");
  if (std::abs(u_l - u_r) < kEqualStatesTol) {
    throw EqualStatesError("rh_speed: equal states, no front");
  }
  return (flux.f(u_l) - flux.f(u_r)) / (u_l - u_r);
}

/// Unique v in [0,1] with f'(v) = sigma.
inline double sonic_level(const FluxModel& flux, double sigma) {
  const double lo = flux.df(0.0);
  const double hi = flux.df(1.0);
  const double slack = 1e-12 * std::max(1.0, std::abs(sigma));
  if (sigma < lo - slack || sigma > hi + slack) {
    std::ostringstream os;
    os << "sonic_level: speed " << sigma << " outside [" << lo << ", " << hi
       << "]";
    throw DomainError(os.str());
  }
  return numerics::bisect_increasing([&](double v) { return flux.df(v); }, 0.0,
                                     1.0, sigma);
}

struct ShockData {
  double u_left = 0.0;
  double u_right = 0.0;
  double sigma = 0.0;
  double v_sonic = 0.0;
  bool entropic = false;
  // E(v_sonic + h) = sum_k potential_taylor[k] h^k (empty for generic fluxes).
  std::vector<double> potential_taylor;

  double lo() const { return std::min(u_left, u_right); }
  double hi() const { return std::max(u_left, u_right); }
};

inline ShockData make_shock(const FluxModel& flux, double u_l, double u_r) {
  ShockData s;
  s.u_left = u_l;
  s.u_right = u_r;
  s.sigma = rh_speed(flux, u_l, u_r);
  s.v_sonic = sonic_level(flux, s.sigma);
  s.entropic = u_l > u_r;
  if (flux.is_polynomial()) {
    s.potential_taylor = flux.taylor(s.v_sonic);
    s.potential_taylor[0] = 0.0;
    if (s.potential_taylor.size() > 1) s.potential_taylor[1] -= s.sigma;
  }
  return s;
}

/// E(w) = f(w) - f(v_sonic) - sigma (w - v_sonic): convex, minimal (zero) at
/// the sonic level, and equal at the two states by the RH relation.
inline double shock_potential(const ShockData& shock, const FluxModel& flux,
                              double w) {
  const double h = w - shock.v_sonic;
  if (!shock.potential_taylor.empty()) {
    // Expanded about the sonic level to avoid cancellation near it.
    double acc = 0.0;
    const auto& c = shock.potential_taylor;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * h + c[k];
    return acc;
  }
  return flux.f(w) - flux.f(shock.v_sonic) - shock.sigma * h;
}

struct BounceResult {
  double level = 0.0;
  bool sonic = false;
};

/// Level reassignment at a front: the level on the opposite side of the
/// sonic level with the same potential E. Involutive and maps u_left to
/// u_right.
inline BounceResult bounce_map(const ShockData& shock, const FluxModel& flux,
                               double v) {
  if (!(v > shock.lo() && v < shock.hi())) {
    std::ostringstream os;
    os << "bounce_map: level " << v << " outside (" << shock.lo() << ", "
       << shock.hi() << ")";
    throw DomainError(os.str());
  }
  if (std::abs(v - shock.v_sonic) <= 1e-14) return {v, true};
  const double target = shock_potential(shock, flux, v);
  if (v > shock.v_sonic) {
    // E decreasing on [lo, v_sonic]: bisect -E.
    const double w = numerics::bisect_increasing(
        [&](double x) { return -shock_potential(shock, flux, x); }, shock.lo(),
        shock.v_sonic, -target);
    return {w, false};
  }
  const double w = numerics::bisect_increasing(
      [&](double x) { return shock_potential(shock, flux, x); }, shock.v_sonic,
      shock.hi(), target);
  return {w, false};
}

// ---------------------------------------------------------------------------
// Entropy pairs

enum class Anchor { ZeroAtZero, ZeroAtOne };

inline const char* to_string(Anchor a) {
  return a == Anchor::ZeroAtZero ? "zero-at-0" : "zero-at-1";
}

/// Entropy/entropy-flux pair. deta_left/deta_right are the one-sided limits
/// of eta'; they differ only at kinks (Kruzkov entropies).
struct EntropyPair {
  ScalarFn eta;
  ScalarFn deta_left;
  ScalarFn deta_right;
  ScalarFn q;
  Anchor anchor = Anchor::ZeroAtZero;
  std::string name;

  // Pointwise eta', taking the right limit at kinks.
  double deta(double v) const { return deta_right(v); }
};

enum class EntropyKind { Quadratic, KruzkovUpper, KruzkovLower, Custom };

struct EntropySpec {
  EntropyKind kind = EntropyKind::Quadratic;
  double a = 0.0;  // Kruzkov level
  ScalarFn eta;    // custom only
  ScalarFn deta;   // custom only
};

namespace detail {

inline EntropyPair anchored(EntropyPair raw, Anchor anchor) {
  const double ref = anchor == Anchor::ZeroAtZero ? 0.0 : 1.0;
  const double eta0 = raw.eta(ref);
  const double q0 = raw.q(ref);
  raw.anchor = anchor;
  if (eta0 != 0.0 || q0 != 0.0) {
    raw.eta = [e = raw.eta, eta0](double u) { return e(u) - eta0; };
    raw.q = [q = raw.q, q0](double u) { return q(u) - q0; };
  }
  return raw;
}

}  // namespace detail

/// eta(u) = u^2/2 (shifted to the anchor), q' = u f'(u).
inline EntropyPair make_quadratic(const FluxModel& flux, Anchor anchor) {
  EntropyPair p;
  p.name = "quadratic";
  p.eta = [](double u) { return 0.5 * u * u; };
  p.deta_left = p.deta_right = [](double u) { return u; };
  if (flux.is_polynomial()) {
    // int_0^u v f'(v) dv = u f(u) - F(u), with F(0) = 0.
    p.q = [flux](double u) { return u * flux.f(u) - flux.primitive(u); };
  } else {
    p.q = [flux](double u) {
      return numerics::adaptive_simpson(
          [&](double v) { return v * flux.df(v); }, std::min(0.0, u),
          std::max(0.0, u), 1e-13) *
             (u >= 0.0 ? 1.0 : -1.0);
    };
  }
  return detail::anchored(std::move(p), anchor);
}

/// eta(u) = (u - a) 1_{u >= a}, q(u) = (f(u) - f(a)) 1_{u >= a}.
inline EntropyPair make_kruzkov(const FluxModel& flux, double a, Anchor anchor) {
  require_unit(a, "kruzkov level");
  EntropyPair p;
  p.name = "kruzkov_upper";
  p.eta = [a](double u) { return u >= a ? u - a : 0.0; };
  p.deta_left = [a](double u) { return u > a ? 1.0 : 0.0; };
  p.deta_right = [a](double u) { return u >= a ? 1.0 : 0.0; };
  p.q = [flux, a](double u) { return u >= a ? flux.f(u) - flux.f(a) : 0.0; };
  return detail::anchored(std::move(p), anchor);
}

/// eta(u) = (a - u) 1_{u <= a}, q(u) = (f(a) - f(u)) 1_{u <= a}.
inline EntropyPair make_kruzkov_lower(const FluxModel& flux, double a,
                                      Anchor anchor) {
  require_unit(a, "kruzkov level");
  EntropyPair p;
  p.name = "kruzkov_lower";
  p.eta = [a](double u) { return u <= a ? a - u : 0.0; };
  p.deta_left = [a](double u) { return u <= a ? -1.0 : 0.0; };
  p.deta_right = [a](double u) { return u < a ? -1.0 : 0.0; };
  p.q = [flux, a](double u) { return u <= a ? flux.f(a) - flux.f(u) : 0.0; };
  return detail::anchored(std::move(p), anchor);
}

/// Custom pair from (eta, eta'); q is the quadrature of eta' f' from the
/// anchor. With require_convex, a non-monotone eta' is rejected.
inline EntropyPair make_custom(const FluxModel& flux, ScalarFn eta,
                               ScalarFn deta, Anchor anchor,
                               bool require_convex = false) {
  if (!eta || !deta) throw DomainError("custom entropy needs eta and eta'");
  if (require_convex) {
    double prev = deta(0.0);
    for (int i = 1; i < kConvexitySamples; ++i) {
      const double u = static_cast<double>(i) / (kConvexitySamples - 1);
      const double d = deta(u);
      if (d < prev - 1e-12) {
        throw ConvexityError("custom entropy is not convex (eta' decreases)");
      }
      prev = d;
    }
  }
  const double ref = anchor == Anchor::ZeroAtZero ? 0.0 : 1.0;
  EntropyPair p;
  p.name = "custom";
  p.anchor = anchor;
  const double eta_ref = eta(ref);
  p.eta = [eta, eta_ref](double u) { return eta(u) - eta_ref; };
  p.deta_left = deta;
  p.deta_right = deta;
  p.q = [flux, deta, ref](double u) {
    const double lo = std::min(ref, u);
    const double hi = std::max(ref, u);
    const double val = numerics::adaptive_simpson(
        [&](double v) { return deta(v) * flux.df(v); }, lo, hi, 1e-12);
    return u >= ref ? val : -val;
  };
  return p;
}

inline EntropyPair make_entropy(const EntropySpec& spec, const FluxModel& flux,
                                Anchor anchor, bool require_convex = false) {
  switch (spec.kind) {
    case EntropyKind::Quadratic:
      return make_quadratic(flux, anchor);
    case EntropyKind::KruzkovUpper:
      return make_kruzkov(flux, spec.a, anchor);
    case EntropyKind::KruzkovLower:
      return make_kruzkov_lower(flux, spec.a, anchor);
    case EntropyKind::Custom:
      return make_custom(flux, spec.eta, spec.deta, anchor, require_convex);
  }
  throw DomainError("unknown entropy kind");
}

/// mu_eta mass per unit time carried by a single travelling jump:
/// sigma [eta] - [q], brackets taken left minus right.
inline double shock_dissipation_rate(const ShockData& shock,
                                     const EntropyPair& pair) {
  return shock.sigma * (pair.eta(shock.u_left) - pair.eta(shock.u_right)) -
         (pair.q(shock.u_left) - pair.q(shock.u_right));
}

}  // namespace lagchar
