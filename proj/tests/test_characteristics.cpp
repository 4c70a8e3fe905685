#include <gtest/gtest.h>

#include <cmath>

#include "lagchar/characteristics.hpp"

using namespace lagchar;

namespace {

struct Scene {
  FrontSolution sol;
  Ensemble hyp;
  Ensemble epi;
};

Scene make(const InitialData& data, double x_lo, double x_hi, int n = 256) {
  Scene s{evolve(FluxModel::burgers(), data, 1.0), {}, {}};
  s.hyp = build_ensemble(s.sol, Side::Hypograph, GridSpec{n, n, x_lo, x_hi, 42}, 4);
  s.epi = build_ensemble(s.sol, Side::Epigraph, GridSpec{n, n, x_lo, x_hi, 43}, 4);
  return s;
}

const Scene& shock() {
  static const Scene s = make(InitialData{1.0, {{1.0, 0.0}}}, -1.0, 3.0);
  return s;
}

const Scene& fan() {
  static const Scene s = make(InitialData{0.0, {{0.0, 1.0}}}, -1.0, 2.0);
  return s;
}

double sup_dev(const PolyLine& p, double (*ref)(double)) {
  double d = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double t = p.t_begin() + (p.t_end() - p.t_begin()) * i / 4000.0;
    d = std::max(d, std::abs(p(t) - ref(t)));
  }
  return d;
}

}  // namespace

TEST(Reachable, Examples) {
  const auto& s = shock();
  for (double sv : {0.25, 0.5, 1.0}) {
    const double r = rightmost_reachable(s.hyp, s.sol.flux, 0.0, 1.0, sv);
    EXPECT_LE(r, 1.0 + 0.5 * sv + 1e-12);
    EXPECT_GE(r, 1.0 + 0.5 * sv - s.hyp.dx());
  }
  const auto zero = make(InitialData{0.0, {}}, -1.0, 1.0, 32);
  EXPECT_TRUE(zero.hyp.curves.empty());
  EXPECT_EQ(rightmost_reachable(zero.hyp, zero.sol.flux, 0.2, 0.3, 0.9), 0.3);
  const auto& f = fan();
  for (double sv : {0.5, 0.75, 1.0}) {
    const double r = rightmost_reachable(f.hyp, f.sol.flux, 0.5, 0.25, sv);
    EXPECT_NEAR(r, 0.5 * sv, 2 * f.hyp.dv());
  }
  EXPECT_THROW(rightmost_reachable(f.hyp, f.sol.flux, 0.5, 0.25, 0.4), DomainError);
}

TEST(Reachable, LipschitzInS) {
  const auto& s = shock();
  const double S = s.sol.flux.s_max();
  double prev = rightmost_reachable(s.hyp, s.sol.flux, 0.1, 1.2, 0.1);
  for (int i = 1; i <= 40; ++i) {
    const double sv = 0.1 + 0.9 * i / 40.0;
    const double r = rightmost_reachable(s.hyp, s.sol.flux, 0.1, 1.2, sv);
    EXPECT_LE(std::abs(r - prev), S * 0.9 / 40.0 + 1e-12);
    prev = r;
  }
}

TEST(Barrier, TracksEntropicShock) {
  const auto& s = shock();
  const auto x = build_barrier(s.hyp, s.sol.flux, 1.0, 1.0 / 16);
  EXPECT_DOUBLE_EQ(x(0.0), 1.0);
  EXPECT_LE(sup_dev(x, [](double t) { return 1.0 + 0.5 * t; }), s.hyp.dx());
  EXPECT_LE(x.lipschitz(), s.sol.flux.s_max() + 1e-12);
}

TEST(Barrier, ConstantStates) {
  const auto c = make(InitialData{0.6, {}}, -2.0, 3.0);
  const auto x = build_barrier(c.hyp, c.sol.flux, 0.5, 0.125);
  // Sits on the vacuum line until the nearest fast curve catches up (less
  // than a cell), then rides the fastest level below 0.6.
  EXPECT_LE(sup_dev(x, [](double t) { return 0.5 + 0.6 * t; }), c.hyp.dx());
  EXPECT_LE(x.slope(x.segments() - 1), 0.6);
  EXPECT_GE(x.slope(x.segments() - 1), 0.6 - 2 * c.hyp.dv());

  const auto zero = make(InitialData{0.0, {}}, -1.0, 1.0, 32);
  const auto z = build_barrier(zero.hyp, zero.sol.flux, 0.3, 0.25);
  for (double xv : z.xs) EXPECT_EQ(xv, 0.3);
  EXPECT_THROW(build_barrier(zero.hyp, zero.sol.flux, 0.3, 0.0), DomainError);
}

TEST(Barrier, VacuumFloorUntilShockArrives) {
  // Starting at x0 = 2 in the u = 0 region: wait there until the shock
  // reaches x = 2 at t = 2, then ride it.
  Scene s{evolve(FluxModel::burgers(), InitialData{1.0, {{1.0, 0.0}}}, 3.0), {}, {}};
  s.hyp = build_ensemble(s.sol, Side::Hypograph, GridSpec{128, 128, -2.0, 5.0, 7}, 4);
  const auto x = build_barrier(s.hyp, s.sol.flux, 2.0, 3.0 / 32);
  EXPECT_EQ(x(1.5), 2.0);
  EXPECT_NEAR(x(3.0), 2.5, s.hyp.dx());
}

TEST(Refine, LevelsAndLipschitz) {
  const auto& s = shock();
  const auto ch = refine_barrier(s.hyp, s.sol.flux, 1.0, 6);
  ASSERT_EQ(ch.levels.size(), 6u);
  ASSERT_EQ(ch.level_gaps.size(), 5u);
  EXPECT_DOUBLE_EQ(ch.deltas.front(), 0.5);
  EXPECT_DOUBLE_EQ(ch.deltas.back(), 1.0 / 64);
  for (const auto& lv : ch.levels) {
    EXPECT_LE(lv.lipschitz(), s.sol.flux.s_max() + 1e-12);
    EXPECT_DOUBLE_EQ(lv(0.0), 1.0);
  }
  for (std::size_t i = 1; i < ch.level_gaps.size(); ++i) {
    EXPECT_LE(ch.level_gaps[i], ch.level_gaps[i - 1] + 1e-12);
  }
  for (double m : ch.level_min_increase) EXPECT_GE(m, -s.hyp.dx());
}

TEST(Refine, FanInterior) {
  const auto& f = fan();
  const auto ch = refine_barrier(f.hyp, f.sol.flux, 0.25, 6, 0.5);
  EXPECT_DOUBLE_EQ(ch.curve.t_begin(), 0.5);
  EXPECT_LE(sup_dev(ch.curve, [](double t) { return 0.5 * t; }), 2 * f.hyp.dv());
  for (double m : ch.level_min_increase) EXPECT_GE(m, -f.hyp.dx());
}

TEST(Refine, ConstantLevelsIdentical) {
  const auto c = make(InitialData{0.3, {}}, -2.0, 3.0, 128);
  const auto ch = refine_barrier(c.hyp, c.sol.flux, 0.0, 4);
  for (double g : ch.level_gaps) EXPECT_LE(g, 1e-12);
  EXPECT_THROW(refine_barrier(c.hyp, c.sol.flux, 0.0, 0), DomainError);
}

TEST(Verify, ShockBarrierFollowsRankineHugoniot) {
  const auto& s = shock();
  auto ch = refine_barrier(s.hyp, s.sol.flux, 1.0, 6);
  const double tol = default_speed_tol(s.hyp, s.sol.mesh, s.sol.flux);
  const auto rep = verify_characteristic(ch, s.sol, tol, 0.25 * s.hyp.dx(), 32, &s.hyp);
  EXPECT_EQ(rep.cells.size(), 32u);
  EXPECT_EQ(rep.jump_cells, 32u);
  EXPECT_LE(rep.violating_fraction(), 0.05);
  EXPECT_GE(rep.jump_fraction_within(2 * s.hyp.dv()), 0.95);
  for (const auto& c : rep.cells) {
    EXPECT_DOUBLE_EQ(c.target_speed, 0.5);
    EXPECT_GT(c.nu_ratio, 0.0);
  }
  EXPECT_EQ(ch.diagnostics.size(), 32u);
}

TEST(Verify, FanSpeedMatchesState) {
  const auto& f = fan();
  auto ch = refine_barrier(f.hyp, f.sol.flux, 0.25, 6, 0.5);
  const double tol = default_speed_tol(f.hyp, f.sol.mesh, f.sol.flux);
  const auto rep = verify_characteristic(ch, f.sol, tol, 0.25 * f.hyp.dx());
  EXPECT_LE(rep.violating_fraction(), 0.05);
  EXPECT_EQ(rep.kruzkov_failures, 0u);
  // The exact fan characteristic: u = x/t up to the staircase step.
  Characteristic exact;
  exact.curve = PolyLine({0.5, 1.0}, {0.25, 0.5});
  const auto er = verify_characteristic(exact, f.sol, tol, 1e-12);
  for (const auto& c : er.cells) {
    EXPECT_NEAR(c.xprime, 0.5, 1e-12);
    EXPECT_LE(std::abs(c.xprime - c.u_minus), f.sol.mesh);
    EXPECT_LE(std::abs(c.xprime - c.u_plus), f.sol.mesh);
  }
}

TEST(Verify, DetectsWrongSpeed) {
  const auto& s = shock();
  Characteristic ch;
  ch.curve = PolyLine({0.0, 1.0}, {-0.5, 0.5});  // speed 1 in u = 1 is fine
  auto ok = verify_characteristic(ch, s.sol, 0.05, 1e-3, 16);
  EXPECT_EQ(ok.violating_time, 0.0);
  ch.curve = PolyLine({0.0, 1.0}, {-0.5, -0.2});  // speed 0.3 is not
  auto bad = verify_characteristic(ch, s.sol, 0.05, 1e-3, 16);
  EXPECT_NEAR(bad.violating_fraction(), 1.0, 1e-12);
  EXPECT_EQ(bad.kruzkov_failures, 16u);
}

TEST(Verify, NonEntropicShockFromFoot) {
  const auto s = make(InitialData{0.0, {{1.0, 1.0, JumpMode::NonEntropic}}}, -1.0, 3.0);
  auto ch = refine_barrier(s.hyp, s.sol.flux, 1.0, 6);
  const double tol = default_speed_tol(s.hyp, s.sol.mesh, s.sol.flux);
  const auto rep = verify_characteristic(ch, s.sol, tol, 0.25 * s.hyp.dx());
  // Whatever curve the construction picks, it is a characteristic and a
  // two-sided barrier.
  EXPECT_LE(rep.violating_fraction(), 0.05);
  EXPECT_EQ(check_left_barrier(ch, s.hyp), 0u);
  EXPECT_EQ(check_right_barrier(ch, s.epi), 0u);
}

TEST(Barriers, NoViolations) {
  for (const Scene* s : {&shock(), &fan()}) {
    const double t0 = s == &fan() ? 0.5 : 0.0;
    const double x0 = s == &fan() ? 0.25 : 1.0;
    const auto ch = refine_barrier(s->hyp, s->sol.flux, x0, 6, t0);
    EXPECT_EQ(check_left_barrier(ch, s->hyp), 0u);
    EXPECT_EQ(check_right_barrier(ch, s->epi), 0u);
  }
  const auto c = make(InitialData{0.4, {}}, -2.0, 3.0, 128);
  const auto ch = refine_barrier(c.hyp, c.sol.flux, 0.5, 4);
  EXPECT_EQ(check_right_barrier(ch, c.epi), 0u);
  EXPECT_EQ(check_left_barrier(ch, c.hyp), 0u);
}

TEST(Barriers, DetectorFindsAdversarialCurve) {
  const auto c = make(InitialData{0.4, {}}, -2.0, 3.0, 64);
  const auto ch = refine_barrier(c.hyp, c.sol.flux, 0.5, 3);
  Ensemble adv;
  LagCurve slow;
  slow.times = {0.0, 1.0};
  slow.xs = {0.6, 0.1};
  slow.vs = {0.0};
  adv.curves.push_back(slow);
  EXPECT_EQ(check_right_barrier(ch, adv), 1u);
  LagCurve fast;
  fast.times = {0.0, 1.0};
  fast.xs = {0.4, 1.4};
  fast.vs = {1.0};
  adv.curves = {fast};
  EXPECT_EQ(check_left_barrier(ch, adv), 1u);
}

TEST(Dissipation, RatiosAtContinuityAndShock) {
  const auto& s = shock();
  const std::vector<double> radii{0.2, 0.1, 0.05};
  for (double r : dissipation_ratio(s.hyp, 0.5, 0.5, radii)) EXPECT_EQ(r, 0.0);
  const auto on = dissipation_ratio(s.hyp, 0.5, 1.25, radii);
  // Level jumps of total size 1/12 per unit time spread along the shock:
  // a ball of radius r holds 2r of shock time.
  for (double r : on) EXPECT_NEAR(r, 2.0 / 12, 0.05);
  const auto c = make(InitialData{0.4, {}}, -2.0, 3.0, 64);
  for (double r : dissipation_ratio(c.hyp, 0.5, 0.5, radii)) EXPECT_EQ(r, 0.0);
  EXPECT_THROW(dissipation_ratio(c.hyp, 0.5, 0.5, {0.0}), DomainError);
}
