#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkde/mirrored_kde.hpp"
#include "rkde/quadrature.hpp"

namespace rkde {

struct DivergenceParams {
  double alpha = 0.8;                  // order of the divergence, > 0 and != 1
  int quadrature_points_per_axis = 48; // tensor Gauss-Legendre resolution, d <= 3
  std::size_t qmc_points = 1u << 16;   // quasi-Monte Carlo points, d > 3

  void validate() const {
    if (!(alpha > 0.0) || alpha == 1.0)
      throw std::invalid_argument("divergence: alpha must be positive and != 1");
    if (quadrature_points_per_axis < 2)
      throw std::invalid_argument("divergence: quadrature points per axis must be >= 2");
    if (qmc_points < 16) throw std::invalid_argument("divergence: qmc_points must be >= 16");
  }
};

struct QuadratureReport {
  std::string method;            // "gauss-legendre" or "qmc-halton"
  std::size_t points = 0;        // total integrand evaluations of the main pass
  double estimated_error = 0.0;  // grid-refinement difference or QMC standard error
};

struct DivergenceEstimate {
  double value = 0.0;           // log(integral_value)/(alpha-1)
  double integral_value = 0.0;  // integral of f_alpha over the cube, > 0 under clipping
  QuadratureReport quadrature_report;
};

// f(x1,x2) = x1^alpha * x2^(1-alpha) on the positive quadrant.
inline double f_alpha(double x1, double x2, double alpha) {
  if (!(x1 > 0.0) || !(x2 > 0.0))
    throw std::domain_error("f_alpha: arguments must be positive");
  return std::pow(x1, alpha) * std::pow(x2, 1.0 - alpha);
}

namespace detail {

// Splits m Gauss-Legendre points per axis into equal panels of order near
// 12. Density estimates have derivative kinks at kernel-support edges, and
// moderate-order panels lose less accuracy to them than one high-order rule.
inline quad::Rule1d panelized_gl_01(int m) {
  int best_order = m, best_panels = 1;
  for (int panels = 2; panels <= m / 6; ++panels) {
    if (m % panels != 0) continue;
    const int order = m / panels;
    if (std::abs(order - 12) < std::abs(best_order - 12)) {
      best_order = order;
      best_panels = panels;
    }
  }
  return quad::composite_gauss_legendre_on(best_order, best_panels, 0.0, 1.0);
}

// Integral of f_alpha(clipped p, clipped q) on the m-per-axis tensor
// Gauss-Legendre grid. Both density fields come from the factorized grid
// evaluator, so the cost is O(n m^d) rather than O(n d m^d).
inline double plugin_integral_gl(const MirroredKde& p_est, const MirroredKde& q_est,
                                 double alpha, int m) {
  const int d = p_est.dim();
  const quad::Rule1d axis = panelized_gl_01(m);
  const std::vector<std::vector<double>> axes(static_cast<std::size_t>(d), axis.nodes);
  const std::vector<double> p_vals = p_est.evaluate_on_axes(axes);
  const std::vector<double> q_vals = q_est.evaluate_on_axes(axes);

  quad::TensorRule rule;
  rule.axes.assign(static_cast<std::size_t>(d), axis);
  double acc = 0.0;
  std::size_t flat = 0;  // for_each flattens with the last axis fastest, as evaluate_on_axes does
  rule.for_each([&](std::span<const double>, double w) {
    acc += w * f_alpha(p_est.clip(p_vals[flat]), q_est.clip(q_vals[flat]), alpha);
    ++flat;
  });
  return acc;
}

// Radical-inverse Halton coordinate for 1-based index.
inline double halton(std::size_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index != 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline std::vector<unsigned> first_primes(int count) {
  std::vector<unsigned> primes;
  unsigned candidate = 2;
  while (static_cast<int>(primes.size()) < count) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

}  // namespace detail

// Plug-in divergence D_alpha(clipped p_hat || clipped q_hat). For d <= 3 the
// integral runs on a tensor Gauss-Legendre grid and the error report is the
// difference against the m/2 grid; for larger d it switches to a Halton
// sequence with a batch-means standard error.
inline DivergenceEstimate plugin_divergence(const MirroredKde& p_est,
                                            const MirroredKde& q_est,
                                            const DivergenceParams& params) {
  params.validate();
  if (p_est.dim() != q_est.dim())
    throw std::invalid_argument("plugin_divergence: estimators have different dimensions");
  const int d = p_est.dim();

  DivergenceEstimate est;
  if (d <= 3) {
    const int m = params.quadrature_points_per_axis;
    const double fine = detail::plugin_integral_gl(p_est, q_est, params.alpha, m);
    const int m_half = std::max(2, m / 2);
    const double coarse =
        m_half == m ? fine : detail::plugin_integral_gl(p_est, q_est, params.alpha, m_half);
    est.integral_value = fine;
    est.quadrature_report.method = "gauss-legendre";
    est.quadrature_report.points = 1;
    for (int j = 0; j < d; ++j) est.quadrature_report.points *= static_cast<std::size_t>(m);
    est.quadrature_report.estimated_error = std::abs(fine - coarse);
  } else {
    const std::size_t batches = 16;
    const std::size_t total = params.qmc_points - params.qmc_points % batches;
    const auto bases = detail::first_primes(d);
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> batch_means(batches, 0.0);
    const std::size_t per_batch = total / batches;
    for (std::size_t b = 0; b < batches; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < per_batch; ++i) {
        const std::size_t index = b * per_batch + i + 1;
        for (int j = 0; j < d; ++j)
          x[static_cast<std::size_t>(j)] =
              detail::halton(index, bases[static_cast<std::size_t>(j)]);
        acc += f_alpha(p_est.evaluate_clipped(x), q_est.evaluate_clipped(x), params.alpha);
      }
      batch_means[b] = acc / static_cast<double>(per_batch);
    }
    double mean = 0.0;
    for (double v : batch_means) mean += v;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double v : batch_means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(batches - 1);
    est.integral_value = mean;
    est.quadrature_report.method = "qmc-halton";
    est.quadrature_report.points = total;
    est.quadrature_report.estimated_error = std::sqrt(var / static_cast<double>(batches));
  }

  if (!(est.integral_value > 0.0))
    throw std::logic_error("plugin_divergence: integral must be positive under clipping");
  est.value = std::log(est.integral_value) / (params.alpha - 1.0);
  return est;
}

using DensityFn = std::function<double(std::span<const double>)>;

// Ground-truth divergence of two analytic densities by tensor
// Gauss-Legendre quadrature of p^alpha q^(1-alpha) over [0,1]^d.
inline double true_divergence(const DensityFn& p, const DensityFn& q, double alpha, int m,
                              int d) {
  if (!(alpha > 0.0) || alpha == 1.0)
    throw std::invalid_argument("true_divergence: alpha must be positive and != 1");
  if (m < 2) throw std::invalid_argument("true_divergence: m must be >= 2");
  if (d < 1) throw std::invalid_argument("true_divergence: d must be >= 1");

  const quad::TensorRule rule = quad::tensor_gauss_legendre_01(m, d);
  double acc = 0.0;
  rule.for_each([&](std::span<const double> pt, double w) {
    const double pv = p(pt);
    const double qv = q(pt);
    if (!std::isfinite(pv) || !std::isfinite(qv))
      throw std::runtime_error("true_divergence: non-finite density value");
    const double term = std::pow(pv, alpha) * std::pow(qv, 1.0 - alpha);
    if (!std::isfinite(term))
      throw std::runtime_error("true_divergence: non-finite integrand value");
    acc += w * term;
  });
  if (!(acc > 0.0)) throw std::runtime_error("true_divergence: integral must be positive");
  return std::log(acc) / (alpha - 1.0);
}

}  // namespace rkde
