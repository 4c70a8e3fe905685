#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lagchar/flux_model.hpp"

using namespace lagchar;

namespace {

FluxModel quartic() { return FluxModel::polynomial({0.0, 0.0, 0.5, 0.0, 0.25}, "quartic"); }

// Plain bisection on a monotone function, kept independent of the library.
double oracle_root(double (*g)(double), double lo, double hi, double target) {
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (g(m) < target ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

double quartic_df(double v) { return v * v * v + v; }

}  // namespace

TEST(FluxModel, BurgersBasics) {
  const auto b = FluxModel::burgers();
  EXPECT_DOUBLE_EQ(b.f(0.5), 0.125);
  EXPECT_DOUBLE_EQ(b.df(0.3), 0.3);
  EXPECT_DOUBLE_EQ(b.ddf(0.7), 1.0);
  EXPECT_DOUBLE_EQ(b.alpha(), 1.0);
  EXPECT_DOUBLE_EQ(b.s_max(), 1.0);
}

TEST(FluxModel, QuarticDerivatives) {
  const auto q = quartic();
  for (double u : {0.0, 0.2, 0.5, 1.0}) {
    EXPECT_NEAR(q.f(u), std::pow(u, 4) / 4 + u * u / 2, 1e-15);
    EXPECT_NEAR(q.df(u), u * u * u + u, 1e-15);
    EXPECT_NEAR(q.ddf(u), 3 * u * u + 1, 1e-15);
  }
  EXPECT_DOUBLE_EQ(q.s_max(), 2.0);
}

TEST(FluxModel, RejectsNonConvex) {
  EXPECT_THROW(FluxModel::polynomial({0.0, 1.0}), ConvexityError);
  EXPECT_THROW(FluxModel::polynomial({0.0, 0.0, 0.0, 1.0}), ConvexityError);
  EXPECT_THROW(FluxModel::polynomial({0.0, 0.0, -0.5}), ConvexityError);
}

TEST(FluxModel, TaylorAndRescale) {
  const auto q = quartic();
  const auto c = q.taylor(0.3);
  for (double h : {-0.3, 0.1, 0.5}) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * h + c[k];
    EXPECT_NEAR(acc, q.f(0.3 + h), 1e-14);
  }
  // Data in [-1, 1]: g(w) = f(-1 + 2w) / 2.
  const auto b = FluxModel::burgers().rescaled(-1.0, 1.0);
  for (double w : {0.0, 0.25, 1.0}) {
    const double u = -1.0 + 2.0 * w;
    EXPECT_NEAR(b.f(w), 0.5 * u * u / 2.0, 1e-15);
  }
  EXPECT_NEAR(b.ddf(0.5), 2.0, 1e-14);
}

TEST(RhSpeed, Examples) {
  EXPECT_DOUBLE_EQ(rh_speed(FluxModel::burgers(), 1.0, 0.0), 0.5);
  EXPECT_THROW(rh_speed(FluxModel::burgers(), 0.3, 0.3), EqualStatesError);
  EXPECT_DOUBLE_EQ(rh_speed(quartic(), 1.0, 0.0), 0.75);
  EXPECT_THROW(rh_speed(FluxModel::burgers(), 1.2, 0.0), DomainError);
}

TEST(SonicLevel, Examples) {
  const auto b = FluxModel::burgers();
  EXPECT_NEAR(sonic_level(b, 0.5), 0.5, 1e-12);
  EXPECT_NEAR(sonic_level(b, 0.0), 0.0, 1e-12);
  const double v = sonic_level(quartic(), 0.75);
  EXPECT_NEAR(v, oracle_root(quartic_df, 0.0, 1.0, 0.75), 1e-12);
  EXPECT_NEAR(v, 0.5673642266809, 1e-12);
  EXPECT_NEAR(v * v * v + v, 0.75, 1e-12);
  EXPECT_THROW(sonic_level(b, 1.5), DomainError);
}

TEST(ShockData, Invariants) {
  for (const auto& flux : {FluxModel::burgers(), quartic()}) {
    for (auto [ul, ur] : {std::pair{1.0, 0.0}, {0.2, 0.9}, {0.7, 0.65}}) {
      const auto s = make_shock(flux, ul, ur);
      EXPECT_GT(s.v_sonic, s.lo());
      EXPECT_LT(s.v_sonic, s.hi());
      EXPECT_NEAR(shock_potential(s, flux, ul), shock_potential(s, flux, ur), 1e-12);
      EXPECT_EQ(s.entropic, ul > ur);
    }
  }
}

TEST(BounceMap, BurgersClosedForm) {
  const auto b = FluxModel::burgers();
  const auto s = make_shock(b, 1.0, 0.0);
  EXPECT_NEAR(bounce_map(s, b, 0.75).level, 0.25, 1e-14);
  const auto sonic = bounce_map(s, b, 0.5);
  EXPECT_TRUE(sonic.sonic);
  EXPECT_DOUBLE_EQ(sonic.level, 0.5);
  EXPECT_THROW(bounce_map(s, b, 1.0), DomainError);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double ul = numerics::unit_uniform(rng);
    const double ur = numerics::unit_uniform(rng);
    if (std::abs(ul - ur) < 1e-3) continue;
    const auto sh = make_shock(b, ul, ur);
    const double v = sh.lo() + (sh.hi() - sh.lo()) * (0.01 + 0.98 * numerics::unit_uniform(rng));
    EXPECT_NEAR(bounce_map(sh, b, v).level, 2.0 * sh.sigma - v, 1e-12);
  }
}

TEST(BounceMap, EndpointLimit) {
  for (const auto& flux : {FluxModel::burgers(), quartic()}) {
    const auto s = make_shock(flux, 0.9, 0.1);
    for (double eps : {1e-4, 1e-6}) {
      EXPECT_NEAR(bounce_map(s, flux, 0.9 - eps).level, 0.1, 30 * eps);
      EXPECT_NEAR(bounce_map(s, flux, 0.1 + eps).level, 0.9, 30 * eps);
    }
  }
}

TEST(BounceMap, InvolutionProperty) {
  std::mt19937_64 rng(2024);
  for (const auto& flux : {FluxModel::burgers(), quartic()}) {
    for (int i = 0; i < 10000; ++i) {
      const double ul = numerics::unit_uniform(rng);
      const double ur = numerics::unit_uniform(rng);
      if (std::abs(ul - ur) < 1e-6) continue;
      const auto s = make_shock(flux, ul, ur);
      const double v = s.lo() + (s.hi() - s.lo()) * numerics::unit_uniform(rng);
      if (!(v > s.lo() && v < s.hi()) || std::abs(v - s.v_sonic) < 1e-12) continue;
      const double w = bounce_map(s, flux, v).level;
      ASSERT_NEAR(bounce_map(s, flux, w).level, v, 1e-9);
      ASSERT_TRUE((v - s.v_sonic) * (w - s.v_sonic) <= 0.0);
    }
  }
}

TEST(BounceMap, MeasurePreservation) {
  const auto flux = quartic();
  const auto s = make_shock(flux, 0.95, 0.05);
  const double v1 = 0.7, v2 = 0.85;
  const double lhs = numerics::adaptive_simpson(
      [&](double v) { return flux.df(v) - s.sigma; }, v1, v2, 1e-13);
  const double b1 = bounce_map(s, flux, v1).level;
  const double b2 = bounce_map(s, flux, v2).level;
  const double rhs = numerics::adaptive_simpson(
      [&](double w) { return s.sigma - flux.df(w); }, b2, b1, 1e-13);
  EXPECT_NEAR(lhs, rhs, 1e-9);
}

TEST(Entropy, QuadraticBurgers) {
  const auto b = FluxModel::burgers();
  const auto p = make_entropy({EntropyKind::Quadratic, 0.0, {}, {}}, b, Anchor::ZeroAtZero);
  for (double u : {0.0, 0.3, 1.0}) {
    EXPECT_NEAR(p.eta(u), u * u / 2, 1e-15);
    EXPECT_NEAR(p.q(u), u * u * u / 3, 1e-15);
  }
}

TEST(Entropy, KruzkovValues) {
  const auto b = FluxModel::burgers();
  const auto k = make_entropy({EntropyKind::KruzkovUpper, 0.5, {}, {}}, b, Anchor::ZeroAtZero);
  EXPECT_DOUBLE_EQ(k.q(1.0), 0.375);
  EXPECT_DOUBLE_EQ(k.deta_left(0.5), 0.0);
  EXPECT_DOUBLE_EQ(k.deta_right(0.5), 1.0);
  const auto k0 = make_entropy({EntropyKind::KruzkovUpper, 0.0, {}, {}}, quartic(), Anchor::ZeroAtZero);
  for (double u : {0.0, 0.4, 1.0}) {
    EXPECT_DOUBLE_EQ(k0.eta(u), u);
    EXPECT_NEAR(k0.q(u), quartic().f(u), 1e-15);
  }
}

TEST(Entropy, AnchorsAndFluxDerivative) {
  const auto flux = quartic();
  const std::vector<EntropySpec> specs = {
      {EntropyKind::Quadratic, 0.0, {}, {}},
      {EntropyKind::KruzkovUpper, 0.3, {}, {}},
      {EntropyKind::KruzkovLower, 0.6, {}, {}},
      {EntropyKind::Custom, 0.0, [](double u) { return std::exp(u); },
       [](double u) { return std::exp(u); }}};
  for (const auto& spec : specs) {
    for (Anchor a : {Anchor::ZeroAtZero, Anchor::ZeroAtOne}) {
      const auto p = make_entropy(spec, flux, a);
      const double ref = a == Anchor::ZeroAtZero ? 0.0 : 1.0;
      EXPECT_NEAR(p.eta(ref), 0.0, 1e-12) << p.name;
      EXPECT_NEAR(p.q(ref), 0.0, 1e-9) << p.name;
      for (double u : {0.15, 0.45, 0.8}) {
        const double h = 1e-6;
        const double dq = (p.q(u + h) - p.q(u - h)) / (2 * h);
        const double expect = p.deta(u) * flux.df(u);
        EXPECT_NEAR(dq, expect, 1e-6 * std::max(1.0, std::abs(expect))) << p.name << " u=" << u;
      }
    }
  }
}

TEST(Entropy, CustomNonConvexRejected) {
  const auto b = FluxModel::burgers();
  EntropySpec spec{EntropyKind::Custom, 0.0, [](double u) { return -u * u; },
                   [](double u) { return -2 * u; }};
  EXPECT_THROW(make_entropy(spec, b, Anchor::ZeroAtZero, true), ConvexityError);
  EXPECT_NO_THROW(make_entropy(spec, b, Anchor::ZeroAtZero, false));
}

TEST(ShockDissipation, Examples) {
  const auto b = FluxModel::burgers();
  const auto quad = make_entropy({EntropyKind::Quadratic, 0.0, {}, {}}, b, Anchor::ZeroAtZero);
  EXPECT_NEAR(shock_dissipation_rate(make_shock(b, 1.0, 0.0), quad), -1.0 / 12, 1e-15);
  EXPECT_NEAR(shock_dissipation_rate(make_shock(b, 0.0, 1.0), quad), 1.0 / 12, 1e-15);
  const auto k = make_entropy({EntropyKind::KruzkovUpper, 0.5, {}, {}}, b, Anchor::ZeroAtZero);
  EXPECT_NEAR(shock_dissipation_rate(make_shock(b, 1.0, 0.0), k), -0.125, 1e-15);
}

TEST(ShockDissipation, SignMatchesEntropicity) {
  std::mt19937_64 rng(11);
  const auto flux = quartic();
  const auto quad = make_entropy({EntropyKind::Quadratic, 0.0, {}, {}}, flux, Anchor::ZeroAtZero);
  for (int i = 0; i < 500; ++i) {
    const double ul = numerics::unit_uniform(rng);
    const double ur = numerics::unit_uniform(rng);
    if (std::abs(ul - ur) < 1e-3) continue;
    const auto s = make_shock(flux, ul, ur);
    const double rate = shock_dissipation_rate(s, quad);
    EXPECT_EQ(rate < 0.0, s.entropic) << ul << " " << ur;
  }
}
