#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rkde/bounds.hpp"
#include "rkde/detail/format.hpp"
#include "rkde/detail/parallel.hpp"
#include "rkde/detail/stats.hpp"
#include "rkde/divergence.hpp"
#include "rkde/kernel.hpp"
#include "rkde/mirrored_kde.hpp"
#include "rkde/rng.hpp"
#include "rkde/sampling.hpp"
#include "rkde/version.hpp"

namespace rkde {

struct GaussianSpec {
  std::vector<double> mean;
  std::vector<double> variance;  // per-axis variances (diagonal covariance)
};

// Declarative description of one Monte Carlo sweep: two truncated Gaussians,
// estimator settings, the n grid, and the smoothness inputs for the bound
// curve. "auto" fields are resolved by run() and reported in the sidecar.
struct ExperimentConfig {
  GaussianSpec p, q;
  double alpha = 0.8;
  double h = 0.25;
  bool h_auto = false;  // true: per-n optimal bandwidth
  std::string kernel_name = "epanechnikov";
  std::vector<std::size_t> n_grid;
  int trials = 100;
  double kappa1 = 0.0, kappa2 = 0.0;
  bool kappa1_auto = true, kappa2_auto = true;
  int quad_m = 48;
  std::optional<std::uint64_t> seed;
  double beta = 2.0;
  double L = 0.0;
  bool L_auto = true;
  double r = 2.0;
  bool include_prefactor = true;
  unsigned threads = 0;  // runtime knob, never serialized; 0 = all cores

  int dim() const { return static_cast<int>(p.mean.size()); }

  void validate() const {
    if (p.mean.empty() || p.mean.size() != p.variance.size())
      throw std::invalid_argument("experiment: p mean/variance size mismatch");
    if (q.mean.size() != p.mean.size() || q.mean.size() != q.variance.size())
      throw std::invalid_argument("experiment: p and q must share one dimension");
    for (double v : p.variance)
      if (!(v > 0.0)) throw std::invalid_argument("experiment: p variances must be > 0");
    for (double v : q.variance)
      if (!(v > 0.0)) throw std::invalid_argument("experiment: q variances must be > 0");
    if (!(alpha > 0.0) || alpha == 1.0)
      throw std::invalid_argument("experiment: alpha must be positive and != 1");
    if (!h_auto && (!(h > 0.0) || !(h < 0.5)))
      throw std::invalid_argument("experiment: bandwidth must lie in (0, 1/2)");
    if (trials < 2) throw std::invalid_argument("experiment: trials must be >= 2");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 1) throw std::invalid_argument("experiment: n values must be >= 1");
      if (i > 0 && n_grid[i] <= n_grid[i - 1])
        throw std::invalid_argument("experiment: n_grid must be strictly increasing");
    }
    if (!kappa1_auto && !(kappa1 > 0.0))
      throw std::invalid_argument("experiment: kappa1 must be > 0");
    if (!kappa1_auto && !kappa2_auto && !(kappa2 >= kappa1))
      throw std::invalid_argument("experiment: kappa2 must be >= kappa1");
    if (quad_m < 2) throw std::invalid_argument("experiment: quad_m must be >= 2");
    if (!seed.has_value()) throw std::invalid_argument("experiment: seed is required");
    if (!(beta > 0.0)) throw std::invalid_argument("experiment: beta must be > 0");
    if (!L_auto && !(L > 0.0)) throw std::invalid_argument("experiment: L must be > 0");
    if (!(r >= 1.0)) throw std::invalid_argument("experiment: r must be >= 1");
  }

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(path + ": invalid JSON: " + e.what());
    }
    return from_json(j);
  }
  nlohmann::ordered_json to_json() const;
};

struct ExperimentRow {
  std::size_t n = 0;
  double h = 0.0;               // bandwidth used at this n
  double mean_estimate = 0.0;
  double bias = 0.0;            // mean_estimate - ground truth
  double variance = 0.0;        // unbiased across trials
  double mse = 0.0;             // mean over trials of (estimate - truth)^2
  double mse_bias_plus_var = 0.0;  // bias^2 + unbiased variance
  double bound_value = 0.0;     // theoretical MSE bound at this n
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  double ground_truth = 0.0;         // high-resolution quadrature oracle
  double ground_truth_coarse = 0.0;  // lower-resolution cross-check
  int ground_truth_m = 0;
  int ground_truth_m_coarse = 0;
  BoundConstants constants;
  HolderParams holder_used;  // resolved beta/L/kappa actually fed to the bounds
  double beta_requested = 0.0;
  bool beta_capped = false;  // true when the kernel's moment order capped beta
  ExperimentConfig config;   // as loaded (auto markers intact)
};

namespace detail {

inline std::vector<double> parse_variance(const nlohmann::json& v, std::size_t d,
                                          bool entries_are_sd) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(d, v.get<double>());
  } else if (v.is_array()) {
    out = v.get<std::vector<double>>();
    if (out.size() != d)
      throw std::invalid_argument("experiment: variance list length must match mean");
  } else {
    throw std::invalid_argument("experiment: variance must be a number or a list");
  }
  if (entries_are_sd)
    for (double& x : out) x = x * x;
  return out;
}

inline GaussianSpec parse_gaussian(const nlohmann::json& j, const char* which) {
  if (!j.is_object() || !j.contains("mean"))
    throw std::invalid_argument(std::string("experiment: ") + which +
                                " must be an object with a mean");
  GaussianSpec g;
  g.mean = j.at("mean").get<std::vector<double>>();
  const bool has_var = j.contains("variance");
  const bool has_sd = j.contains("sd");
  if (has_var == has_sd)
    throw std::invalid_argument(std::string("experiment: ") + which +
                                " needs exactly one of variance/sd");
  g.variance = parse_variance(has_var ? j.at("variance") : j.at("sd"), g.mean.size(),
                              has_sd);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "mean" && key != "variance" && key != "sd")
      throw std::invalid_argument(std::string("experiment: unknown key '") + key +
                                  "' in " + which);
  }
  return g;
}

// Number-or-"auto" field.
inline bool parse_auto(const nlohmann::json& v, const char* name, double& out) {
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return true;
    throw std::invalid_argument(std::string("experiment: ") + name +
                                " must be a number or \"auto\"");
  }
  if (!v.is_number())
    throw std::invalid_argument(std::string("experiment: ") + name +
                                " must be a number or \"auto\"");
  out = v.get<double>();
  return false;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "p",      "q",     "alpha",  "bandwidth", "kernel", "n_grid",
      "trials", "kappa1", "kappa2", "quad_m",   "seed",   "holder",
      "include_prefactor"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("experiment: unknown config key '" + key + "'");
  }

  ExperimentConfig cfg;
  cfg.p = detail::parse_gaussian(j.at("p"), "p");
  cfg.q = detail::parse_gaussian(j.at("q"), "q");
  cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("bandwidth")) cfg.h_auto = detail::parse_auto(j.at("bandwidth"), "bandwidth", cfg.h);
  cfg.kernel_name = j.value("kernel", std::string("epanechnikov"));
  cfg.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
  cfg.trials = j.at("trials").get<int>();
  if (j.contains("kappa1")) cfg.kappa1_auto = detail::parse_auto(j.at("kappa1"), "kappa1", cfg.kappa1);
  if (j.contains("kappa2")) cfg.kappa2_auto = detail::parse_auto(j.at("kappa2"), "kappa2", cfg.kappa2);
  cfg.quad_m = j.value("quad_m", 48);
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("holder")) {
    const auto& hj = j.at("holder");
    for (const auto& [key, value] : hj.items()) {
      (void)value;
      if (key != "beta" && key != "L" && key != "r")
        throw std::invalid_argument("experiment: unknown holder key '" + key + "'");
    }
    cfg.beta = hj.value("beta", 2.0);
    if (hj.contains("L")) cfg.L_auto = detail::parse_auto(hj.at("L"), "L", cfg.L);
    cfg.r = hj.value("r", 2.0);
  }
  cfg.include_prefactor = j.value("include_prefactor", true);
  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  auto gaussian = [](const GaussianSpec& g) {
    nlohmann::ordered_json out;
    out["mean"] = g.mean;
    out["variance"] = g.variance;
    return out;
  };
  j["p"] = gaussian(p);
  j["q"] = gaussian(q);
  j["alpha"] = alpha;
  if (h_auto)
    j["bandwidth"] = "auto";
  else
    j["bandwidth"] = h;
  j["kernel"] = kernel_name;
  j["n_grid"] = n_grid;
  j["trials"] = trials;
  if (kappa1_auto)
    j["kappa1"] = "auto";
  else
    j["kappa1"] = kappa1;
  if (kappa2_auto)
    j["kappa2"] = "auto";
  else
    j["kappa2"] = kappa2;
  j["quad_m"] = quad_m;
  if (seed) j["seed"] = *seed;
  j["holder"]["beta"] = beta;
  if (L_auto)
    j["holder"]["L"] = "auto";
  else
    j["holder"]["L"] = L;
  j["holder"]["r"] = r;
  j["include_prefactor"] = include_prefactor;
  return j;
}

namespace detail {

// Dual exponent norm ||v||_{r*} with 1/r + 1/r* = 1; r = 1 gives the max norm.
inline double dual_norm(std::span<const double> v, double r) {
  if (r <= 1.0) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  const double rs = r / (r - 1.0);
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x), rs);
  return std::pow(acc, 1.0 / rs);
}

// Smallest/largest true density over the tensor grid, across both densities.
inline std::pair<double, double> density_range_on_grid(const TruncatedGaussian& p,
                                                       const TruncatedGaussian& q,
                                                       const quad::TensorRule& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  grid.for_each([&](std::span<const double> pt, double) {
    for (const TruncatedGaussian* dist : {&p, &q}) {
      const double v = dist->density(pt);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  });
  return {lo, hi};
}

// Holder constant estimate for ell in {0,1}: the largest dual-norm of the
// gradient (ell = 0) or of a Hessian row (ell = 1) over the grid, times
// diam^(ell+1-beta) to convert the Lipschitz modulus into a beta-Holder one.
inline double holder_L_auto(const TruncatedGaussian& p, const TruncatedGaussian& q,
                            const quad::TensorRule& grid, double beta, double r) {
  HolderParams probe;
  probe.beta = beta;
  const int ell = probe.ell();
  if (ell > 1)
    throw std::invalid_argument(
        "experiment: automatic L supports beta <= 2; give L explicitly");
  const std::size_t d = static_cast<std::size_t>(grid.dim());
  double m = 0.0;
  grid.for_each([&](std::span<const double> pt, double) {
    for (const TruncatedGaussian* dist : {&p, &q}) {
      if (ell == 0) {
        const auto g = dist->density_gradient(pt);
        m = std::max(m, dual_norm(g, r));
      } else {
        const auto hess = dist->density_hessian(pt);
        for (std::size_t i = 0; i < d; ++i)
          m = std::max(m, dual_norm({hess.data() + i * d, d}, r));
      }
    }
  });
  const double diam = std::pow(static_cast<double>(d), 1.0 / r);
  return m * std::pow(diam, static_cast<double>(ell) + 1.0 - beta);
}

}  // namespace detail

// Runs the full sweep: for every n and trial, draw fresh p/q samples with
// seeds derived from the master seed, fit both mirrored estimators, compute
// the plug-in divergence, and aggregate against the quadrature ground truth.
// Results are independent of the thread count.
inline ExperimentResult run(const ExperimentConfig& config,
                            const std::function<void(const std::string&)>& log = {}) {
  config.validate();
  const int d = config.dim();

  KernelSpec kernel = kernel_by_name(config.kernel_name);

  // Effective smoothness: the bias expansion needs kernel moments up to
  // ell(beta), so beta is capped at validated_moment_order + 1.
  const double beta_cap = static_cast<double>(kernel.validated_moment_order) + 1.0;
  const bool capped = config.beta > beta_cap;
  const double beta_eff = capped ? beta_cap : config.beta;

  {
    HolderParams probe;
    probe.beta = beta_eff;
    const auto report = validate_kernel(kernel, std::max(probe.ell(), 0), 1e-9);
    if (!report.ok)
      throw invalid_kernel_error("experiment: kernel failed validation at order " +
                                 std::to_string(probe.ell()));
  }

  const TruncatedGaussian p_dist(config.p.mean, config.p.variance);
  const TruncatedGaussian q_dist(config.q.mean, config.q.variance);

  const quad::TensorRule grid = quad::tensor_gauss_legendre_01(config.quad_m, d);

  HolderParams holder;
  holder.beta = beta_eff;
  holder.r = config.r;
  const auto [density_min, density_max] = detail::density_range_on_grid(p_dist, q_dist, grid);
  holder.kappa1 = config.kappa1_auto ? density_min : config.kappa1;
  holder.kappa2 = config.kappa2_auto ? density_max : config.kappa2;
  holder.L = config.L_auto
                 ? detail::holder_L_auto(p_dist, q_dist, grid, beta_eff, config.r)
                 : config.L;
  holder.validate();

  ExperimentResult result;
  result.config = config;
  result.holder_used = holder;
  result.beta_requested = config.beta;
  result.beta_capped = capped;

  const DensityFn p_density = [&](std::span<const double> x) { return p_dist.density(x); };
  const DensityFn q_density = [&](std::span<const double> x) { return q_dist.density(x); };
  result.ground_truth_m_coarse = 64;
  result.ground_truth_m = 96;
  result.ground_truth_coarse =
      true_divergence(p_density, q_density, config.alpha, result.ground_truth_m_coarse, d);
  result.ground_truth =
      true_divergence(p_density, q_density, config.alpha, result.ground_truth_m, d);
  if (log)
    log("ground truth: " + detail::format_double(result.ground_truth) + " (m=" +
        std::to_string(result.ground_truth_m) + "; m=" +
        std::to_string(result.ground_truth_m_coarse) + " gives " +
        detail::format_double(result.ground_truth_coarse) + ")");

  result.constants =
      compute_bound_constants(holder, config.alpha, kernel, d, config.include_prefactor);

  DivergenceParams div_params;
  div_params.alpha = config.alpha;
  div_params.quadrature_points_per_axis = config.quad_m;

  const unsigned threads =
      config.threads == 0 ? detail::default_thread_count() : config.threads;
  const std::uint64_t master = *config.seed;
  const std::size_t trials = static_cast<std::size_t>(config.trials);

  for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
    const std::size_t n = config.n_grid[ni];
    const double h_n =
        config.h_auto ? optimal_bandwidth(beta_eff, d, n) : config.h;

    std::vector<double> estimates(trials, 0.0);
    detail::parallel_for(trials, threads, [&](std::size_t t) {
      const std::uint64_t p_seed = derive_seed(master, {ni, t, 0});
      const std::uint64_t q_seed = derive_seed(master, {ni, t, 1});
      try {
        const SampleSet p_sample = p_dist.sample(n, p_seed);
        const SampleSet q_sample = q_dist.sample(n, q_seed);
        const MirroredKde p_hat(p_sample, kernel, h_n, holder);
        const MirroredKde q_hat(q_sample, kernel, h_n, holder);
        estimates[t] = plugin_divergence(p_hat, q_hat, div_params).value;
      } catch (const std::exception& e) {
        throw std::runtime_error("trial failed: n=" + std::to_string(n) + " trial=" +
                                 std::to_string(t) + " p_seed=" + std::to_string(p_seed) +
                                 " q_seed=" + std::to_string(q_seed) + ": " + e.what());
      }
    });

    ExperimentRow row;
    row.n = n;
    row.h = h_n;
    row.mean_estimate = detail::mean(estimates);
    row.bias = row.mean_estimate - result.ground_truth;
    std::vector<double> sq_dev(trials), sq_err(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      const double dev = estimates[t] - row.mean_estimate;
      sq_dev[t] = dev * dev;
      const double err = estimates[t] - result.ground_truth;
      sq_err[t] = err * err;
    }
    row.variance = detail::pairwise_sum(sq_dev) / static_cast<double>(trials - 1);
    row.mse = detail::mean(sq_err);
    row.mse_bias_plus_var = row.bias * row.bias + row.variance;
    row.bound_value = mse_bound(result.constants, holder, kernel, d, n);
    result.rows.push_back(row);

    if (log)
      log("n=" + std::to_string(n) + ": mean=" + detail::format_double(row.mean_estimate) +
          " bias=" + detail::format_double(row.bias) +
          " variance=" + detail::format_double(row.variance) +
          " mse=" + detail::format_double(row.mse) +
          " bound=" + detail::format_double(row.bound_value));
  }

  return result;
}

// Writes the sweep as a CSV (columns n, mean_estimate, bias, variance, mse,
// bound) plus a JSON sidecar at <path>.json carrying the config, resolved
// parameters, constants, ground truth, and alternate MSE column. Output is
// byte-deterministic for identical results.
inline void export_result(const ExperimentResult& result, const std::string& csv_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + csv_path);
    out << "n,mean_estimate,bias,variance,mse,bound\n";
    for (const auto& row : result.rows) {
      out << row.n << ',' << detail::format_double(row.mean_estimate) << ','
          << detail::format_double(row.bias) << ',' << detail::format_double(row.variance)
          << ',' << detail::format_double(row.mse) << ','
          << detail::format_double(row.bound_value) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + csv_path);
  }

  nlohmann::ordered_json j;
  j["version"] = std::string(version);
  j["config"] = result.config.to_json();
  nlohmann::ordered_json resolved;
  resolved["d"] = result.config.dim();
  resolved["kappa1"] = result.holder_used.kappa1;
  resolved["kappa2"] = result.holder_used.kappa2;
  resolved["beta_requested"] = result.beta_requested;
  resolved["beta_used"] = result.holder_used.beta;
  resolved["beta_capped_by_kernel_moment_order"] = result.beta_capped;
  resolved["L"] = result.holder_used.L;
  resolved["r"] = result.holder_used.r;
  resolved["prefactor_included"] = result.constants.prefactor_included;
  j["resolved"] = resolved;
  nlohmann::ordered_json consts;
  consts["c_f"] = result.constants.c_f;
  consts["c_l"] = result.constants.c_l;
  consts["c2"] = result.constants.c2;
  consts["c3"] = result.constants.c3;
  consts["mcdiarmid_c"] = result.constants.mcdiarmid_c;
  consts["k1"] = result.constants.k1;
  consts["k2"] = result.constants.k2;
  consts["prefactor"] = result.constants.prefactor;
  consts["bias_coeff_h_beta"] = result.constants.bias_coeffs.a;
  consts["bias_coeff_h_2beta"] = result.constants.bias_coeffs.b;
  consts["bias_coeff_inv_nhd"] = result.constants.bias_coeffs.c;
  j["constants"] = consts;
  nlohmann::ordered_json truth;
  truth["value"] = result.ground_truth;
  truth["quad_m"] = result.ground_truth_m;
  truth["coarse_value"] = result.ground_truth_coarse;
  truth["coarse_quad_m"] = result.ground_truth_m_coarse;
  j["ground_truth"] = truth;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json rj;
    rj["n"] = row.n;
    rj["bandwidth"] = row.h;
    rj["mean_estimate"] = row.mean_estimate;
    rj["bias"] = row.bias;
    rj["variance"] = row.variance;
    rj["mse"] = row.mse;
    rj["mse_bias_plus_var"] = row.mse_bias_plus_var;
    rj["bound"] = row.bound_value;
    j["rows"].push_back(rj);
  }

  std::ofstream out(csv_path + ".json");
  if (!out) throw std::runtime_error("cannot open for writing: " + csv_path + ".json");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + csv_path + ".json");
}

}  // namespace rkde
