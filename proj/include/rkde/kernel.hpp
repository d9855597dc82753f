#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rkde/errors.hpp"
#include "rkde/quadrature.hpp"

namespace rkde {

// A symmetric univariate smoothing kernel supported on [-1,1]. `evaluate`
// must vanish outside [-1,1]; `l1_norm` is the integral of |K| (>= 1, since
// the kernel integrates to one); `validated_moment_order` is the largest ell
// for which validate_kernel has passed.
struct KernelSpec {
  std::string name;
  std::function<double(double)> evaluate;
  double l1_norm = 1.0;
  int validated_moment_order = 0;

  double operator()(double u) const { return evaluate(u); }
};

// Epanechnikov kernel: 3/4 * (1 - u^2) for |u| <= 1. Its second moment is
// 1/5, so only the first moment vanishes.
inline KernelSpec epanechnikov_kernel() {
  KernelSpec spec;
  spec.name = "epanechnikov";
  spec.evaluate = [](double u) { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; };
  spec.l1_norm = 1.0;
  spec.validated_moment_order = 1;
  return spec;
}

// Uniform kernel: 1/2 on [-1,1].
inline KernelSpec uniform_kernel() {
  KernelSpec spec;
  spec.name = "uniform";
  spec.evaluate = [](double u) { return std::abs(u) <= 1.0 ? 0.5 : 0.0; };
  spec.l1_norm = 1.0;
  spec.validated_moment_order = 1;
  return spec;
}

inline KernelSpec kernel_by_name(const std::string& name) {
  if (name == "epanechnikov") return epanechnikov_kernel();
  if (name == "uniform") return uniform_kernel();
  throw invalid_kernel_error("unknown kernel '" + name + "'");
}

// One moment check: integral of u^j K(u) over [-1,1] against its target
// (1 for j = 0, 0 for j >= 1).
struct MomentCheck {
  int order = 0;
  double value = 0.0;
  double target = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<MomentCheck> moments;  // orders 0..ell
  double l1_norm = 0.0;              // recomputed by adaptive quadrature
  bool l1_norm_consistent = false;   // matches spec.l1_norm and >= 1
  bool vanishes_outside_support = false;
  bool ok = false;

  // Smallest failing moment order, or -1 when all pass.
  int first_failed_moment() const {
    for (const auto& m : moments)
      if (!m.pass) return m.order;
    return -1;
  }
};

// Checks the kernel axioms at moment order `ell`: unit integral, vanishing
// moments 1..ell, zero outside [-1,1], and agreement of the declared
// l1_norm with adaptive quadrature. Throws invalid_kernel_error when the
// kernel itself is malformed (empty or non-finite on [-1,1]).
inline ValidationReport validate_kernel(const KernelSpec& spec, int ell, double tol = 1e-9) {
  if (ell < 0) throw invalid_kernel_error("moment order must be >= 0");
  if (!(tol > 0.0)) throw invalid_kernel_error("tolerance must be > 0");
  if (!spec.evaluate) throw invalid_kernel_error("kernel function is empty");
  for (int i = 0; i <= 400; ++i) {
    const double u = -1.0 + 2.0 * static_cast<double>(i) / 400.0;
    if (!std::isfinite(spec.evaluate(u)))
      throw invalid_kernel_error("kernel is non-finite at u=" + std::to_string(u));
  }

  ValidationReport out;

  out.vanishes_outside_support = true;
  for (double u : {1.0 + 1e-9, 1.1, 1.5, 2.0, 10.0}) {
    if (spec.evaluate(u) != 0.0 || spec.evaluate(-u) != 0.0) {
      out.vanishes_outside_support = false;
      break;
    }
  }

  out.moments.resize(static_cast<std::size_t>(ell) + 1);
  for (int j = 0; j <= ell; ++j) {
    MomentCheck check;
    check.order = j;
    check.target = (j == 0) ? 1.0 : 0.0;
    check.value = quad::integrate_adaptive(
        [&](double u) { return std::pow(u, j) * spec.evaluate(u); }, -1.0, 1.0, 1e-13);
    check.pass = std::abs(check.value - check.target) <= tol;
    out.moments[static_cast<std::size_t>(j)] = check;
  }

  out.l1_norm = quad::integrate_adaptive(
      [&](double u) { return std::abs(spec.evaluate(u)); }, -1.0, 1.0, 1e-13);
  out.l1_norm_consistent =
      std::abs(out.l1_norm - spec.l1_norm) <= tol && out.l1_norm >= 1.0 - tol;

  out.ok = out.vanishes_outside_support && out.l1_norm_consistent &&
           out.first_failed_moment() < 0;
  return out;
}

// Product kernel over d axes: prod_j K(v_j). Zero whenever any |v_j| > 1.
inline double product_kernel_eval(const KernelSpec& spec, std::span<const double> v) {
  double prod = 1.0;
  for (double vj : v) prod *= spec.evaluate(vj);
  return prod;
}

}  // namespace rkde
