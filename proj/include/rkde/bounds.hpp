#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkde/detail/stats.hpp"
#include "rkde/divergence.hpp"
#include "rkde/holder.hpp"
#include "rkde/kernel.hpp"
#include "rkde/mirrored_kde.hpp"
#include "rkde/quadrature.hpp"

namespace rkde {

namespace detail {

inline void require_kappa_alpha(double kappa1, double kappa2, double alpha) {
  if (!(kappa1 > 0.0)) throw std::domain_error("kappa1 must be > 0");
  if (!(kappa2 >= kappa1)) throw std::domain_error("kappa2 must be >= kappa1");
  if (!(alpha > 0.0) || alpha == 1.0)
    throw std::domain_error("alpha must be positive and != 1");
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace detail

// Largest absolute value of the five first/second partials of
// f(x1,x2) = x1^a x2^(1-a) over [kappa1,kappa2]^2. Each partial is a
// monomial with a sign-definite coefficient, hence monotone in each
// argument, so the extremes sit at the four corners.
inline double compute_cf(double kappa1, double kappa2, double alpha) {
  detail::require_kappa_alpha(kappa1, kappa2, alpha);
  const double a = alpha;
  const auto partials = [a](double x1, double x2) {
    return std::array<double, 5>{
        a * std::pow(x1, a - 1.0) * std::pow(x2, 1.0 - a),          // df/dx1
        (1.0 - a) * std::pow(x1, a) * std::pow(x2, -a),             // df/dx2
        a * (a - 1.0) * std::pow(x1, a - 2.0) * std::pow(x2, 1.0 - a),  // d2f/dx1^2
        (1.0 - a) * (-a) * std::pow(x1, a) * std::pow(x2, -a - 1.0),    // d2f/dx2^2
        a * (1.0 - a) * std::pow(x1, a - 1.0) * std::pow(x2, -a),       // d2f/dx1dx2
    };
  };
  double best = 0.0;
  for (double x1 : {kappa1, kappa2})
    for (double x2 : {kappa1, kappa2})
      for (double v : partials(x1, x2)) best = std::max(best, std::abs(v));
  return best;
}

// C_L = 1/c with c = min of f over [kappa1,kappa2]^2; f is monotone in each
// argument so the minimum is the smallest corner value.
inline double compute_cl(double kappa1, double kappa2, double alpha) {
  detail::require_kappa_alpha(kappa1, kappa2, alpha);
  double c = std::numeric_limits<double>::infinity();
  for (double x1 : {kappa1, kappa2})
    for (double x2 : {kappa1, kappa2})
      c = std::min(c, std::pow(x1, alpha) * std::pow(x2, 1.0 - alpha));
  return 1.0 / c;
}

// C3 = L * ((3 d^(1/r))^beta + (3d+1)^ell / ell!). Accepts L = 0 (gives 0).
inline double compute_c3(const HolderParams& holder, int d) {
  if (d < 1) throw std::invalid_argument("compute_c3: d must be >= 1");
  const int ell = holder.ell();
  const double term1 = std::pow(3.0 * std::pow(static_cast<double>(d), 1.0 / holder.r),
                                holder.beta);
  const double term2 = std::pow(3.0 * d + 1.0, ell) / detail::factorial(ell);
  return holder.L * (term1 + term2);
}

// Every explicit constant feeding the finite-sample bounds, kept as a
// record so bound curves are auditable term by term.
struct BoundConstants {
  double c_f = 0.0;         // derivative bound on f over the clipped square
  double c_l = 0.0;         // mean-value constant for the log
  double c2 = 0.0;          // L/ell! * ||K||_1^d
  double c3 = 0.0;          // smoothness constant of the bias expansion
  double mcdiarmid_c = 0.0; // |alpha-1| / (2 c_l c_f)
  double k1 = 0.0;          // mcdiarmid_c^2
  double k2 = 0.0;          // max of the three bias coefficients below
  double prefactor = 1.0;   // c_f c_l / (|alpha-1| kappa1), 1 when excluded
  bool prefactor_included = true;
  struct BiasCoeffs {
    double a = 0.0;  // multiplies h^beta
    double b = 0.0;  // multiplies h^(2 beta)
    double c = 0.0;  // multiplies 1/(n h^d)
  } bias_coeffs;
  // Context the constants were computed from.
  double alpha = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double beta = 0.0;
  int d = 0;
  double kernel_l1 = 0.0;
};

// Assembles BoundConstants for a kernel/smoothness/clipping configuration.
// Refuses a beta whose required moment order exceeds what the kernel has
// validated, since the bias expansion would then be vacuous.
inline BoundConstants compute_bound_constants(const HolderParams& holder, double alpha,
                                              const KernelSpec& kernel, int d,
                                              bool include_prefactor = true) {
  holder.validate();
  if (d < 1) throw std::invalid_argument("bound constants: d must be >= 1");
  detail::require_kappa_alpha(holder.kappa1, holder.kappa2, alpha);
  if (holder.ell() > kernel.validated_moment_order)
    throw std::invalid_argument(
        "bound constants: beta requires kernel moments of order " +
        std::to_string(holder.ell()) + " but only " +
        std::to_string(kernel.validated_moment_order) + " are validated");

  BoundConstants c;
  c.alpha = alpha;
  c.kappa1 = holder.kappa1;
  c.kappa2 = holder.kappa2;
  c.beta = holder.beta;
  c.d = d;
  c.kernel_l1 = kernel.l1_norm;
  c.c_f = compute_cf(holder.kappa1, holder.kappa2, alpha);
  c.c_l = compute_cl(holder.kappa1, holder.kappa2, alpha);
  c.c2 = holder.L / detail::factorial(holder.ell()) * std::pow(kernel.l1_norm, d);
  c.c3 = compute_c3(holder, d);
  c.mcdiarmid_c = std::abs(alpha - 1.0) / (2.0 * c.c_l * c.c_f);
  c.k1 = c.mcdiarmid_c * c.mcdiarmid_c;
  c.prefactor_included = include_prefactor;
  c.prefactor =
      include_prefactor ? c.c_f * c.c_l / (std::abs(alpha - 1.0) * holder.kappa1) : 1.0;
  c.bias_coeffs.a = c.prefactor * (c.c2 + c.c3);
  c.bias_coeffs.b = c.prefactor * c.c2;
  c.bias_coeffs.c = c.prefactor * holder.kappa2 * std::pow(kernel.l1_norm, d);
  c.k2 = std::max({c.bias_coeffs.a, c.bias_coeffs.b, c.bias_coeffs.c});
  return c;
}

// Bias bound a h^beta + b h^(2 beta) + c/(n h^d) with the coefficients from
// BoundConstants (prefactor folded in).
inline double bias_bound(const BoundConstants& consts, const HolderParams& holder,
                         const KernelSpec& /*kernel*/, int d, std::size_t n, double h) {
  if (n < 1) throw std::invalid_argument("bias_bound: n must be >= 1");
  if (!(h > 0.0) || !(h < 0.5))
    throw invalid_bandwidth_error("bias_bound: h must lie in (0, 1/2)");
  const double nh = static_cast<double>(n) * std::pow(h, d);
  return consts.bias_coeffs.a * std::pow(h, holder.beta) +
         consts.bias_coeffs.b * std::pow(h, 2.0 * holder.beta) + consts.bias_coeffs.c / nh;
}

// Concentration: min(1, 2 exp(-k1 eps^2 n / ||K||_1^(2d))).
inline double concentration_bound(const BoundConstants& consts, double epsilon,
                                  std::size_t n, const KernelSpec& kernel, int d) {
  if (n < 1) throw std::invalid_argument("concentration_bound: n must be >= 1");
  if (!(epsilon >= 0.0)) throw std::domain_error("concentration_bound: epsilon must be >= 0");
  const double denom = std::pow(kernel.l1_norm, 2 * d);
  const double raw =
      2.0 * std::exp(-consts.k1 * epsilon * epsilon * static_cast<double>(n) / denom);
  return std::min(1.0, raw);
}

// Variance bound 2 ||K||_1^(2d) / (k1 n).
inline double variance_bound(const BoundConstants& consts, std::size_t n,
                             const KernelSpec& kernel, int d) {
  if (n < 1) throw std::invalid_argument("variance_bound: n must be >= 1");
  return 2.0 * std::pow(kernel.l1_norm, 2 * d) / (consts.k1 * static_cast<double>(n));
}

// Bias-minimizing bandwidth n^(-1/(d+beta)), clipped below 1/2 so the
// mirrored estimator stays valid.
inline double optimal_bandwidth(double beta, int d, std::size_t n) {
  if (n < 1) throw std::invalid_argument("optimal_bandwidth: n must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("optimal_bandwidth: beta must be > 0");
  if (d < 1) throw std::invalid_argument("optimal_bandwidth: d must be >= 1");
  const double h = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + beta));
  return std::min(0.499, h);
}

// MSE bound: variance bound plus the squared bias bound at the optimal
// bandwidth. This is the curve drawn over the empirical MSE sweep.
inline double mse_bound(const BoundConstants& consts, const HolderParams& holder,
                        const KernelSpec& kernel, int d, std::size_t n) {
  const double h = optimal_bandwidth(holder.beta, d, n);
  const double b = bias_bound(consts, holder, kernel, d, n, h);
  return variance_bound(consts, n, kernel, d) + b * b;
}

// Empirical bias field B(x) = E p_hat(x) - p(x) on a tensor grid, with
// E p_hat estimated by averaging over independently refitted estimators.
struct BiasField {
  std::vector<double> bias;  // per grid node, flattened last-axis-fastest
  double integral_sq = 0.0;  // quadrature of B^2 over the cube
  int refits = 0;
};

// est_builder(i) must return a freshly fitted estimator for refit i (own
// sample draw). Refit means are index-stored and pairwise-reduced, so the
// result does not depend on evaluation order.
inline BiasField empirical_bias_field(
    const std::function<MirroredKde(int)>& est_builder, const DensityFn& true_density,
    const quad::TensorRule& grid, int refits = 200) {
  if (refits < 1) throw std::invalid_argument("empirical_bias_field: refits must be >= 1");
  if (grid.dim() < 1) throw std::invalid_argument("empirical_bias_field: empty grid");

  std::vector<std::vector<double>> axis_nodes;
  axis_nodes.reserve(static_cast<std::size_t>(grid.dim()));
  for (const auto& ax : grid.axes) axis_nodes.push_back(ax.nodes);
  const std::size_t nodes = grid.total_points();

  // per_refit[t] holds the full grid evaluation of refit t.
  std::vector<std::vector<double>> per_refit(static_cast<std::size_t>(refits));
  for (int t = 0; t < refits; ++t) {
    const MirroredKde est = est_builder(t);
    if (est.dim() != grid.dim())
      throw std::invalid_argument("empirical_bias_field: estimator/grid dimension mismatch");
    per_refit[static_cast<std::size_t>(t)] = est.evaluate_on_axes(axis_nodes);
  }

  BiasField field;
  field.refits = refits;
  field.bias.resize(nodes);
  std::vector<double> column(static_cast<std::size_t>(refits));
  std::size_t flat = 0;
  double integral = 0.0;
  grid.for_each([&](std::span<const double> pt, double w) {
    for (int t = 0; t < refits; ++t)
      column[static_cast<std::size_t>(t)] = per_refit[static_cast<std::size_t>(t)][flat];
    const double b = detail::mean(column) - true_density(pt);
    field.bias[flat] = b;
    integral += w * b * b;
    ++flat;
  });
  field.integral_sq = integral;
  return field;
}

}  // namespace rkde
