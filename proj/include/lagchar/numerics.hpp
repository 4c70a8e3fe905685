#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <vector>

namespace lagchar::numerics {

// Root of an increasing function on [lo, hi] by bisection, iterated down to
// machine resolution. Returns the endpoint when the sign does not change.
template <class F>
double bisect_increasing(F&& g, double lo, double hi, double target) {
  if (g(lo) >= target) return lo;
  if (g(hi) <= target) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == target) return mid;
    if (gm < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(g(lo) - target) <= std::abs(g(hi) - target) ? lo : hi;
}

namespace detail {

template <class F>
double simpson_step(F& fn, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = fn(lm);
  const double frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with Richardson correction.
template <class F>
double adaptive_simpson(F&& fn, double a, double b, double tol = 1e-9,
                        int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double fa = fn(a);
  const double fb = fn(b);
  const double m = 0.5 * (a + b);
  const double fm = fn(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Below this the panel differences are rounding noise.
  const double floor = 1e-14 * (b - a) * (std::abs(fa) + std::abs(fm) + std::abs(fb));
  return detail::simpson_step(fn, a, b, fa, fm, fb, whole, std::max(tol, floor), max_depth);
}

// Sorted, deduplicated split points restricted to [a, b], always containing
// both ends.
inline std::vector<double> clean_breaks(std::vector<double> pts, double a,
                                        double b, double merge_tol = 1e-14) {
  pts.push_back(a);
  pts.push_back(b);
  std::erase_if(pts, [&](double p) { return !(p >= a && p <= b); });
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double p : pts) {
    if (out.empty() || p - out.back() > merge_tol) out.push_back(p);
  }
  if (out.size() == 1) out.push_back(b);
  out.back() = b;
  return out;
}

// Piecewise adaptive Simpson: integrates separately between consecutive
// breaks so that kinks and jumps of the integrand never sit inside a panel.
// The tolerance is distributed in proportion to panel length.
template <class F>
double integrate_piecewise(F&& fn, std::span<const double> breaks,
                           double tol = 1e-9) {
  if (breaks.size() < 2) return 0.0;
  const double total = breaks.back() - breaks.front();
  if (!(total > 0.0)) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (!(b > a)) continue;
    sum += adaptive_simpson(fn, a, b, tol * (b - a) / total);
  }
  return sum;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit fit;
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return fit;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// Slope of log(y) against log(x); entries with non-positive values skipped.
inline double loglog_rate(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_line(lx, ly).slope;
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine output.
// Unlike std::uniform_real_distribution this is identical across standard
// library implementations.
template <class Engine>
double unit_uniform(Engine& rng) {
  static_assert(Engine::max() == std::numeric_limits<std::uint64_t>::max());
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Evaluates fn(i) for i in [0, n) on up to `threads` workers. Results land in
// index order, so any reduction over the returned vector is deterministic.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned threads, F&& fn) {
  std::vector<T> out(n);
  if (threads <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) out[i] = fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace lagchar::numerics
