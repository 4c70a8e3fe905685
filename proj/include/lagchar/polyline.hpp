#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lagchar/errors.hpp"

namespace lagchar {

/// Continuous piecewise-linear function t -> x given by its vertices.
struct PolyLine {
  std::vector<double> ts;
  std::vector<double> xs;

  PolyLine() = default;
  PolyLine(std::vector<double> t, std::vector<double> x)
      : ts(std::move(t)), xs(std::move(x)) {
    validate();
  }

  void validate() const {
    if (ts.size() != xs.size() || ts.size() < 2) {
      throw DomainError("polyline needs at least two (t, x) vertices");
    }
    for (std::size_t i = 1; i < ts.size(); ++i) {
      if (!(ts[i] > ts[i - 1])) {
        throw DomainError("polyline times must be strictly increasing");
      }
    }
  }

  double t_begin() const { return ts.front(); }
  double t_end() const { return ts.back(); }
  std::size_t segments() const { return ts.size() - 1; }

  // Segment index containing t; right-continuous, last segment closed.
  std::size_t segment_at(double t) const {
    if (t <= ts.front()) return 0;
    if (t >= ts.back()) return ts.size() - 2;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    return static_cast<std::size_t>(it - ts.begin()) - 1;
  }

  double slope(std::size_t i) const {
    return (xs[i + 1] - xs[i]) / (ts[i + 1] - ts[i]);
  }

  double operator()(double t) const {
    const std::size_t i = segment_at(t);
    return xs[i] + slope(i) * (t - ts[i]);
  }

  // Right derivative at t.
  double derivative(double t) const { return slope(segment_at(t)); }

  double lipschitz() const {
    double l = 0.0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      l = std::max(l, std::abs(slope(i)));
    }
    return l;
  }

  void append(double t, double x) {
    if (!ts.empty() && t <= ts.back()) {
      if (t == ts.back()) {
        xs.back() = x;
        return;
      }
      throw DomainError("polyline append out of order");
    }
    ts.push_back(t);
    xs.push_back(x);
  }
};

}  // namespace lagchar
