#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rkde/errors.hpp"
#include "rkde/rng.hpp"
#include "rkde/sample_set.hpp"

namespace rkde {

// Multivariate Gaussian with diagonal covariance, truncated to [0,1]^d and
// renormalized. Diagonal entries are variances. The normalizer factorizes
// into 1-D Gaussian CDF differences, so it is exact to machine precision.
class TruncatedGaussian {
 public:
  TruncatedGaussian(std::vector<double> mean, std::vector<double> variance)
      : mean_(std::move(mean)), var_(std::move(variance)) {
    if (mean_.empty() || mean_.size() != var_.size())
      throw std::invalid_argument("TruncatedGaussian: mean/variance size mismatch");
    sd_.resize(var_.size());
    normalizer_ = 1.0;
    for (std::size_t i = 0; i < var_.size(); ++i) {
      if (!(var_[i] > 0.0))
        throw std::invalid_argument("TruncatedGaussian: variances must be > 0");
      sd_[i] = std::sqrt(var_[i]);
      normalizer_ *= normal_cdf((1.0 - mean_[i]) / sd_[i]) - normal_cdf((0.0 - mean_[i]) / sd_[i]);
    }
    if (!(normalizer_ > 0.0))
      throw pathological_distribution_error("TruncatedGaussian: no mass inside [0,1]^d");
  }

  int dim() const { return static_cast<int>(mean_.size()); }
  std::span<const double> mean() const { return mean_; }
  std::span<const double> variance() const { return var_; }
  double normalizer() const { return normalizer_; }

  static double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

  // Renormalized density phi(x)/Z on the cube.
  double density(std::span<const double> x) const {
    require_point(x);
    double log_phi = 0.0;
    const double log_two_pi = std::log(2.0 * std::acos(-1.0));
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double z = (x[i] - mean_[i]) / sd_[i];
      log_phi += -0.5 * z * z - std::log(sd_[i]) - 0.5 * log_two_pi;
    }
    return std::exp(log_phi) / normalizer_;
  }

  // Gradient of the renormalized density: grad_i = p(x) * t_i with
  // t_i = -(x_i - mu_i)/sigma_i^2.
  std::vector<double> density_gradient(std::span<const double> x) const {
    const double p = density(x);
    std::vector<double> g(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i)
      g[i] = p * (-(x[i] - mean_[i]) / var_[i]);
    return g;
  }

  // Hessian of the renormalized density, row-major d x d:
  // H_ij = p(x) * (t_i t_j - delta_ij / sigma_i^2).
  std::vector<double> density_hessian(std::span<const double> x) const {
    const double p = density(x);
    const std::size_t d = mean_.size();
    std::vector<double> t(d);
    for (std::size_t i = 0; i < d; ++i) t[i] = -(x[i] - mean_[i]) / var_[i];
    std::vector<double> hess(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        hess[i * d + j] = p * (t[i] * t[j] - (i == j ? 1.0 / var_[i] : 0.0));
    return hess;
  }

  // n i.i.d. draws by rejection: propose from the untruncated Gaussian,
  // accept inside [0,1]^d. Deterministic given the seed. Throws when the
  // observed acceptance rate sinks below 1e-6.
  SampleSet sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    Rng rng(seed);
    SampleSet out(dim());
    out.reserve(n);
    std::vector<double> candidate(mean_.size());
    std::uint64_t attempts = 0;
    std::size_t accepted = 0;
    while (accepted < n) {
      ++attempts;
      bool inside = true;
      for (std::size_t i = 0; i < mean_.size(); ++i) {
        candidate[i] = mean_[i] + sd_[i] * rng.normal();
        if (!(candidate[i] >= 0.0 && candidate[i] <= 1.0)) inside = false;
      }
      if (inside) {
        out.add(candidate);
        ++accepted;
      }
      if (attempts >= (1ULL << 20) &&
          static_cast<double>(accepted) < 1e-6 * static_cast<double>(attempts))
        throw pathological_distribution_error(
            "rejection sampling acceptance rate below 1e-6");
    }
    return out;
  }

 private:
  void require_point(std::span<const double> x) const {
    if (x.size() != mean_.size())
      throw std::invalid_argument("TruncatedGaussian: dimension mismatch");
    for (double c : x)
      if (!(c >= 0.0 && c <= 1.0)) throw std::domain_error("point outside [0,1]^d");
  }

  std::vector<double> mean_;
  std::vector<double> var_;
  std::vector<double> sd_;
  double normalizer_ = 0.0;
};

}  // namespace rkde
