#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rkde::quad {

// One-dimensional rule: nodes and matching weights on some interval.
struct Rule1d {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on the Legendre
// recurrence. Nodes returned in ascending order.
inline Rule1d gauss_legendre(int m) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: m must be >= 1");
  Rule1d rule;
  rule.nodes.resize(static_cast<std::size_t>(m));
  rule.weights.resize(static_cast<std::size_t>(m));
  const double pi = std::acos(-1.0);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th root (descending order).
    double x = std::cos(pi * (i + 0.75) / (m + 0.5));
    double deriv = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) p1 = x;  // P_1(x) = x; loop above did not run
      deriv = m * (x * p1 - p0) / (x * x - 1.0);
      if (m == 1) deriv = 1.0;
      const double step = p1 / deriv;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    // Recompute the derivative at the converged node for the weight.
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      deriv = (m == 1) ? 1.0 : m * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * deriv * deriv);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.nodes[static_cast<std::size_t>(m - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(m - 1 - i)] = w;
  }
  if (m % 2 == 1) rule.nodes[static_cast<std::size_t>(m / 2)] = 0.0;
  return rule;
}

// Affine map of a [-1,1] rule onto [a,b].
inline Rule1d map_rule(const Rule1d& unit, double a, double b) {
  Rule1d out = unit;
  const double mid = 0.5 * (a + b);
  const double halfw = 0.5 * (b - a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.nodes[i] = mid + halfw * unit.nodes[i];
    out.weights[i] = halfw * unit.weights[i];
  }
  return out;
}

inline Rule1d gauss_legendre_on(int m, double a, double b) {
  return map_rule(gauss_legendre(m), a, b);
}

// Composite Gauss-Legendre: `panels` equal panels of `m` points each.
// Used where the integrand is only piecewise smooth (kernel support edges).
inline Rule1d composite_gauss_legendre_on(int m, int panels, double a, double b) {
  if (panels < 1) throw std::invalid_argument("composite rule: panels must be >= 1");
  const Rule1d unit = gauss_legendre(m);
  Rule1d out;
  out.nodes.reserve(static_cast<std::size_t>(m) * panels);
  out.weights.reserve(static_cast<std::size_t>(m) * panels);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const Rule1d piece = map_rule(unit, a + p * width, a + (p + 1) * width);
    out.nodes.insert(out.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    out.weights.insert(out.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return out;
}

namespace detail {

template <class F>
double rule_apply(F&& f, const Rule1d& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

inline const Rule1d& unit_rule_low() {
  static const Rule1d r = gauss_legendre(10);
  return r;
}

inline const Rule1d& unit_rule_high() {
  static const Rule1d r = gauss_legendre(21);
  return r;
}

}  // namespace detail

// Adaptive 1-D integration by interval bisection with a GL10/GL21 error
// estimate. `tol` is an absolute tolerance for the whole interval. Throws on
// non-finite integrand values.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_adaptive: tol must be > 0");
  if (a == b) return 0.0;

  struct Seg {
    double a, b, tol;
    int depth;
  };
  auto eval_pair = [&](double lo, double hi, double& low_q, double& high_q) {
    const Rule1d lo_rule = map_rule(detail::unit_rule_low(), lo, hi);
    const Rule1d hi_rule = map_rule(detail::unit_rule_high(), lo, hi);
    low_q = detail::rule_apply(f, lo_rule);
    high_q = detail::rule_apply(f, hi_rule);
    if (!std::isfinite(low_q) || !std::isfinite(high_q))
      throw std::runtime_error("integrate_adaptive: non-finite integrand value");
  };

  std::vector<Seg> stack{{a, b, tol, 0}};
  double total = 0.0;
  std::size_t segments = 0;
  while (!stack.empty()) {
    const Seg seg = stack.back();
    stack.pop_back();
    if (++segments > 2'000'000)
      throw std::runtime_error("integrate_adaptive: subdivision limit exceeded");
    double low_q = 0.0, high_q = 0.0;
    eval_pair(seg.a, seg.b, low_q, high_q);
    const double err = std::abs(high_q - low_q);
    if (err <= seg.tol || seg.depth >= 52) {
      total += high_q;
      continue;
    }
    const double mid = 0.5 * (seg.a + seg.b);
    stack.push_back({seg.a, mid, 0.5 * seg.tol, seg.depth + 1});
    stack.push_back({mid, seg.b, 0.5 * seg.tol, seg.depth + 1});
  }
  return total;
}

// Tensor-product rule over [0,1]^d with per-axis 1-D rules.
struct TensorRule {
  std::vector<Rule1d> axes;

  int dim() const { return static_cast<int>(axes.size()); }

  std::size_t total_points() const {
    std::size_t n = 1;
    for (const auto& ax : axes) n *= ax.size();
    return n;
  }

  // Calls visit(point, weight) for every tensor node. Point is a span of dim()
  // coordinates; last axis varies fastest.
  template <class Visit>
  void for_each(Visit&& visit) const {
    const int d = dim();
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> pt(static_cast<std::size_t>(d));
    const std::size_t total = total_points();
    for (std::size_t flat = 0; flat < total; ++flat) {
      double w = 1.0;
      for (int j = 0; j < d; ++j) {
        const auto& ax = axes[static_cast<std::size_t>(j)];
        pt[static_cast<std::size_t>(j)] = ax.nodes[idx[static_cast<std::size_t>(j)]];
        w *= ax.weights[idx[static_cast<std::size_t>(j)]];
      }
      visit(std::span<const double>(pt), w);
      for (int j = d - 1; j >= 0; --j) {
        auto& i = idx[static_cast<std::size_t>(j)];
        if (++i < axes[static_cast<std::size_t>(j)].size()) break;
        i = 0;
      }
    }
  }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for_each([&](std::span<const double> pt, double w) { acc += w * f(pt); });
    return acc;
  }
};

// Same m-point Gauss-Legendre rule on [0,1] along every axis.
inline TensorRule tensor_gauss_legendre_01(int m, int d) {
  if (d < 1) throw std::invalid_argument("tensor rule: d must be >= 1");
  TensorRule t;
  const Rule1d ax = gauss_legendre_on(m, 0.0, 1.0);
  t.axes.assign(static_cast<std::size_t>(d), ax);
  return t;
}

}  // namespace rkde::quad
