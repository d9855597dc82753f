#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rkde/errors.hpp"
#include "rkde/holder.hpp"
#include "rkde/kernel.hpp"
#include "rkde/quadrature.hpp"
#include "rkde/sample_set.hpp"

namespace rkde {

// One of the 3^d axis partitions (S1, S2, S3): per axis, 0 means S1
// (reflection across the 0 face), 1 means S2 (interior), 2 means S3
// (reflection across the 1 face). The trit encoding makes disjointness and
// coverage structural.
struct RegionIndex {
  std::vector<std::uint8_t> code;

  int dim() const { return static_cast<int>(code.size()); }

  bool operator==(const RegionIndex&) const = default;
};

// All 3^d partitions, last axis fastest.
inline std::vector<RegionIndex> all_regions(int d) {
  if (d < 1) throw std::invalid_argument("all_regions: d must be >= 1");
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= 3;
  std::vector<RegionIndex> out(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    RegionIndex idx;
    idx.code.resize(static_cast<std::size_t>(d));
    std::size_t rem = flat;
    for (int j = d - 1; j >= 0; --j) {
      idx.code[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(rem % 3);
      rem /= 3;
    }
    out[flat] = std::move(idx);
  }
  return out;
}

namespace detail {

inline void require_unit_cube(std::span<const double> x) {
  for (double c : x)
    if (!(c >= 0.0 && c <= 1.0))
      throw std::domain_error("point outside [0,1]^d");
}

inline void require_bandwidth(double h) {
  // The left/right boundary collars [0,h] and [1-h,1] must not overlap.
  if (!(h > 0.0) || !(h < 0.5))
    throw invalid_bandwidth_error("bandwidth must lie in (0, 1/2)");
}

}  // namespace detail

// Region containing x: axis i goes to S1 iff x_i <= h, to S3 iff
// x_i >= 1-h, to S2 otherwise. Collar boundaries are inclusive.
inline RegionIndex region_of(std::span<const double> x, double h) {
  detail::require_bandwidth(h);
  detail::require_unit_cube(x);
  RegionIndex idx;
  idx.code.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    idx.code[j] = x[j] <= h ? 0 : (x[j] >= 1.0 - h ? 2 : 1);
  }
  return idx;
}

// Regional kernel K_S(x,y): product over axes of K((x_j+y_j)/h) for j in S1,
// K((x_j-y_j)/h) for j in S2, K((x_j-2+y_j)/h) for j in S3.
inline double regional_kernel_eval(const KernelSpec& k, const RegionIndex& S,
                                   std::span<const double> x, std::span<const double> y,
                                   double h) {
  if (S.code.size() != x.size() || x.size() != y.size())
    throw std::invalid_argument("regional_kernel_eval: dimension mismatch");
  double prod = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double u;
    switch (S.code[j]) {
      case 0: u = (x[j] + y[j]) / h; break;
      case 1: u = (x[j] - y[j]) / h; break;
      default: u = (x[j] - 2.0 + y[j]) / h; break;
    }
    prod *= k.evaluate(u);
  }
  return prod;
}

namespace detail {

// Sum of the three per-axis kernel terms (interior plus the two face
// reflections). Terms whose argument is outside the kernel support are
// skipped; since x,y are in [0,1], (x+y)/h >= 0 and (x-2+y)/h <= 0 always.
inline double mirrored_axis_term(const KernelSpec& k, double xj, double yj, double h) {
  double s = 0.0;
  const double interior = (xj - yj) / h;
  if (interior >= -1.0 && interior <= 1.0) s += k.evaluate(interior);
  const double left = (xj + yj) / h;
  if (left <= 1.0) s += k.evaluate(left);
  const double right = (xj - 2.0 + yj) / h;
  if (right >= -1.0) s += k.evaluate(right);
  return s;
}

}  // namespace detail

// Mirror-image kernel density estimator on [0,1]^d, clipped into
// [kappa1, kappa2] on request. Immutable after construction; evaluate is
// pure and safe to call concurrently.
class MirroredKde {
 public:
  MirroredKde(SampleSet sample, KernelSpec kernel, double h, HolderParams holder)
      : sample_(std::move(sample)),
        kernel_(std::move(kernel)),
        h_(h),
        holder_(holder) {
    detail::require_bandwidth(h_);
    holder_.validate();
    if (sample_.empty()) throw std::invalid_argument("MirroredKde: empty sample");
    if (!kernel_.evaluate) throw invalid_kernel_error("MirroredKde: kernel function is empty");
  }

  const SampleSet& sample() const { return sample_; }
  const KernelSpec& kernel() const { return kernel_; }
  double bandwidth() const { return h_; }
  const HolderParams& holder() const { return holder_; }
  int dim() const { return sample_.dim(); }

  // Unclipped estimate (1/(n h^d)) sum_i sum_S K_S(x, x^i), computed in the
  // reflected-points form: sum_S K_S(x,y) factorizes as the product over
  // axes of the three-term sums handled by mirrored_axis_term.
  double evaluate(std::span<const double> x) const {
    detail::require_unit_cube(x);
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("evaluate: dimension mismatch");
    const std::size_t n = sample_.size();
    const int d = dim();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = sample_.point(i);
      double prod = 1.0;
      for (int j = 0; j < d; ++j) {
        prod *= detail::mirrored_axis_term(kernel_, x[static_cast<std::size_t>(j)],
                                           y[static_cast<std::size_t>(j)], h_);
        if (prod == 0.0) break;
      }
      acc += prod;
    }
    return acc / (static_cast<double>(n) * std::pow(h_, d));
  }

  // Reference implementation: the literal double sum over all 3^d regional
  // kernels. Kept for equivalence testing against evaluate().
  double evaluate_by_regions(std::span<const double> x) const {
    detail::require_unit_cube(x);
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("evaluate_by_regions: dimension mismatch");
    const std::size_t n = sample_.size();
    const auto regions = all_regions(dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = sample_.point(i);
      double per_sample = 0.0;
      for (const auto& S : regions) per_sample += regional_kernel_eval(kernel_, S, x, y, h_);
      acc += per_sample;
    }
    return acc / (static_cast<double>(n) * std::pow(h_, dim()));
  }

  double clip(double v) const { return std::clamp(v, holder_.kappa1, holder_.kappa2); }

  // min(kappa2, max(kappa1, p_hat(x))).
  double evaluate_clipped(std::span<const double> x) const { return clip(evaluate(x)); }

  // Evaluates the unclipped estimate at every node of the tensor grid
  // spanned by the per-axis node vectors; returns values flattened with the
  // last axis fastest. Algebraically identical to calling evaluate at each
  // grid point, but factorizes the per-axis kernel terms across the grid so
  // the cost is O(n * m^d) rather than O(n * d * m^d) kernel calls.
  std::vector<double> evaluate_on_axes(
      const std::vector<std::vector<double>>& axis_nodes) const {
    const int d = dim();
    if (static_cast<int>(axis_nodes.size()) != d)
      throw std::invalid_argument("evaluate_on_axes: need one node vector per axis");
    std::size_t total = 1;
    for (const auto& nodes : axis_nodes) {
      for (double c : nodes)
        if (!(c >= 0.0 && c <= 1.0)) throw std::domain_error("grid node outside [0,1]");
      total *= nodes.size();
    }
    if (total == 0) return {};

    const std::size_t n = sample_.size();
    // terms[j][i * m_j + k] = mirrored axis term for sample i, axis j, node k.
    std::vector<std::vector<double>> terms(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const auto& nodes = axis_nodes[static_cast<std::size_t>(j)];
      auto& tj = terms[static_cast<std::size_t>(j)];
      tj.resize(n * nodes.size());
      for (std::size_t i = 0; i < n; ++i) {
        const double yj = sample_.point(i)[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < nodes.size(); ++k)
          tj[i * nodes.size() + k] = detail::mirrored_axis_term(kernel_, nodes[k], yj, h_);
      }
    }

    std::vector<double> out(total, 0.0);
    const std::size_t last_m = axis_nodes.back().size();
    std::vector<const double*> row(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j)
        row[static_cast<std::size_t>(j)] =
            terms[static_cast<std::size_t>(j)].data() +
            i * axis_nodes[static_cast<std::size_t>(j)].size();
      scatter(axis_nodes, row, 0, 1.0, out.data(), last_m);
    }
    const double scale = 1.0 / (static_cast<double>(n) * std::pow(h_, d));
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  // Accumulates prefix * (outer product of the remaining axis rows) into out.
  static void scatter(const std::vector<std::vector<double>>& axis_nodes,
                      const std::vector<const double*>& row, int axis, double prefix,
                      double* out, std::size_t last_m) {
    const int d = static_cast<int>(axis_nodes.size());
    if (axis == d - 1) {
      const double* last = row[static_cast<std::size_t>(axis)];
      for (std::size_t k = 0; k < last_m; ++k) out[k] += prefix * last[k];
      return;
    }
    std::size_t stride = 1;
    for (int j = axis + 1; j < d; ++j) stride *= axis_nodes[static_cast<std::size_t>(j)].size();
    const std::size_t m = axis_nodes[static_cast<std::size_t>(axis)].size();
    const double* r = row[static_cast<std::size_t>(axis)];
    for (std::size_t k = 0; k < m; ++k) {
      if (r[k] == 0.0) continue;
      scatter(axis_nodes, row, axis + 1, prefix * r[k], out + k * stride, last_m);
    }
  }

  SampleSet sample_;
  KernelSpec kernel_;
  double h_;
  HolderParams holder_;
};

// Numerical evaluation of sum_S integral over [0,1]^d of |K_S(x,y)| dx.
// By Fubini and distributivity this is the product over axes of
//   integral_0^1 |K((x+y_j)/h)| + |K((x-y_j)/h)| + |K((x-2+y_j)/h)| dx,
// and each 1-D piece is integrated adaptively over its exact support
// window. Equals h^d ||K||_1^d when the kernel mass identity holds.
inline double mirrored_mass(const KernelSpec& k, std::span<const double> y, double h, int d) {
  if (static_cast<int>(y.size()) != d)
    throw std::invalid_argument("mirrored_mass: dimension mismatch");
  detail::require_bandwidth(h);
  detail::require_unit_cube(y);

  auto piece = [&](auto arg_of_x, double lo, double hi) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
    if (!(lo < hi)) return 0.0;
    return quad::integrate_adaptive(
        [&](double x) { return std::abs(k.evaluate(arg_of_x(x))); }, lo, hi, 1e-12);
  };

  double mass = 1.0;
  for (int j = 0; j < d; ++j) {
    const double yj = y[static_cast<std::size_t>(j)];
    double axis = 0.0;
    // Interior term, support x in [y-h, y+h].
    axis += piece([&](double x) { return (x - yj) / h; }, yj - h, yj + h);
    // Reflection across 0, support x in [-y-h, -y+h].
    axis += piece([&](double x) { return (x + yj) / h; }, -yj - h, -yj + h);
    // Reflection across 1, support x in [2-y-h, 2-y+h].
    axis += piece([&](double x) { return (x - 2.0 + yj) / h; }, 2.0 - yj - h, 2.0 - yj + h);
    mass *= axis;
  }
  return mass;
}

}  // namespace rkde
