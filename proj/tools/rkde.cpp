// Command-line front end: validate-kernel, sample, estimate, bounds,
// experiment. Exit codes: 0 success, 1 usage/validation error, 2
// computation error. Diagnostics are single lines on stderr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkde/bounds.hpp"
#include "rkde/divergence.hpp"
#include "rkde/experiment.hpp"
#include "rkde/kernel.hpp"
#include "rkde/mirrored_kde.hpp"
#include "rkde/sample_set.hpp"
#include "rkde/sampling.hpp"
#include "rkde/version.hpp"

namespace {

using nlohmann::ordered_json;

void emit(const ordered_json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + out_path);
}

// Broadcasts a one-element list across d axes.
std::vector<double> broadcast(std::vector<double> v, std::size_t d, const char* flag) {
  if (v.size() == 1) v.assign(d, v[0]);
  if (v.size() != d)
    throw std::invalid_argument(std::string(flag) + " needs 1 or " + std::to_string(d) +
                                " comma-separated values");
  return v;
}

struct ValidateKernelArgs {
  std::string kernel = "epanechnikov";
  int ell = 1;
  double tol = 1e-9;
};

int run_validate_kernel(const ValidateKernelArgs& args) {
  const rkde::KernelSpec kernel = rkde::kernel_by_name(args.kernel);
  const rkde::ValidationReport report = rkde::validate_kernel(kernel, args.ell, args.tol);

  ordered_json j;
  j["kernel"] = kernel.name;
  j["ell"] = args.ell;
  j["tol"] = args.tol;
  j["ok"] = report.ok;
  j["l1_norm"] = report.l1_norm;
  j["l1_norm_consistent"] = report.l1_norm_consistent;
  j["vanishes_outside_support"] = report.vanishes_outside_support;
  j["first_failed_moment"] = report.first_failed_moment();
  j["moments"] = ordered_json::array();
  for (const auto& m : report.moments) {
    ordered_json mj;
    mj["order"] = m.order;
    mj["value"] = m.value;
    mj["target"] = m.target;
    mj["pass"] = m.pass;
    j["moments"].push_back(mj);
  }
  std::cout << j.dump(2) << '\n';
  return report.ok ? 0 : 1;
}

struct SampleArgs {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> sd;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool header = false;
};

int run_sample(const SampleArgs& args) {
  const std::size_t d = args.mean.size();
  std::vector<double> variance;
  if (!args.var.empty()) {
    variance = broadcast(args.var, d, "--var");
  } else {
    variance = broadcast(args.sd, d, "--sd");
    for (double& v : variance) v = v * v;
  }
  const rkde::TruncatedGaussian dist(args.mean, variance);
  const rkde::SampleSet sample = dist.sample(args.n, args.seed);
  sample.save_csv(args.out, args.header);
  return 0;
}

struct EstimateArgs {
  std::string samples_p, samples_q;
  double alpha = 0.8;
  double bandwidth = 0.25;
  std::string kernel = "epanechnikov";
  double kappa1 = 0.0, kappa2 = 0.0;
  int quad_m = 48;
  std::size_t qmc_points = 1u << 16;
  std::string out;
};

int run_estimate(const EstimateArgs& args) {
  const rkde::KernelSpec kernel = rkde::kernel_by_name(args.kernel);
  rkde::HolderParams holder;
  holder.kappa1 = args.kappa1;
  holder.kappa2 = args.kappa2;

  const rkde::SampleSet p_sample = rkde::SampleSet::load_csv(args.samples_p);
  const rkde::SampleSet q_sample = rkde::SampleSet::load_csv(args.samples_q);
  if (p_sample.dim() != q_sample.dim())
    throw std::invalid_argument("sample dimensions differ: " + args.samples_p + " has d=" +
                                std::to_string(p_sample.dim()) + ", " + args.samples_q +
                                " has d=" + std::to_string(q_sample.dim()));

  const rkde::MirroredKde p_hat(p_sample, kernel, args.bandwidth, holder);
  const rkde::MirroredKde q_hat(q_sample, kernel, args.bandwidth, holder);

  rkde::DivergenceParams params;
  params.alpha = args.alpha;
  params.quadrature_points_per_axis = args.quad_m;
  params.qmc_points = args.qmc_points;
  const rkde::DivergenceEstimate est = rkde::plugin_divergence(p_hat, q_hat, params);

  ordered_json j;
  j["value"] = est.value;
  j["integral"] = est.integral_value;
  j["quadrature_report"]["method"] = est.quadrature_report.method;
  j["quadrature_report"]["points"] = est.quadrature_report.points;
  j["quadrature_report"]["estimated_error"] = est.quadrature_report.estimated_error;
  emit(j, args.out);
  return 0;
}

struct BoundsArgs {
  double alpha = 0.8;
  double kappa1 = 0.0, kappa2 = 0.0;
  double beta = 2.0, L = 1.0, r = 2.0;
  int d = 1;
  std::size_t n = 1;
  double bandwidth = 0.25;
  std::string kernel = "epanechnikov";
  std::vector<double> epsilons;
  bool no_prefactor = false;
  std::string out;
};

int run_bounds(const BoundsArgs& args) {
  const rkde::KernelSpec kernel = rkde::kernel_by_name(args.kernel);
  rkde::HolderParams holder;
  holder.beta = args.beta;
  holder.L = args.L;
  holder.r = args.r;
  holder.kappa1 = args.kappa1;
  holder.kappa2 = args.kappa2;
  const rkde::BoundConstants consts = rkde::compute_bound_constants(
      holder, args.alpha, kernel, args.d, !args.no_prefactor);

  ordered_json j;
  j["constants"]["c_f"] = consts.c_f;
  j["constants"]["c_l"] = consts.c_l;
  j["constants"]["c2"] = consts.c2;
  j["constants"]["c3"] = consts.c3;
  j["constants"]["mcdiarmid_c"] = consts.mcdiarmid_c;
  j["constants"]["k1"] = consts.k1;
  j["constants"]["k2"] = consts.k2;
  j["constants"]["prefactor"] = consts.prefactor;
  j["constants"]["prefactor_included"] = consts.prefactor_included;
  j["constants"]["bias_coeff_h_beta"] = consts.bias_coeffs.a;
  j["constants"]["bias_coeff_h_2beta"] = consts.bias_coeffs.b;
  j["constants"]["bias_coeff_inv_nhd"] = consts.bias_coeffs.c;
  j["bounds"]["bias"] =
      rkde::bias_bound(consts, holder, kernel, args.d, args.n, args.bandwidth);
  j["bounds"]["variance"] = rkde::variance_bound(consts, args.n, kernel, args.d);
  j["bounds"]["optimal_bandwidth"] = rkde::optimal_bandwidth(args.beta, args.d, args.n);
  j["bounds"]["mse"] = rkde::mse_bound(consts, holder, kernel, args.d, args.n);
  j["bounds"]["concentration"] = ordered_json::array();
  for (double eps : args.epsilons) {
    ordered_json cj;
    cj["epsilon"] = eps;
    cj["bound"] = rkde::concentration_bound(consts, eps, args.n, kernel, args.d);
    j["bounds"]["concentration"].push_back(cj);
  }
  emit(j, args.out);
  return 0;
}

struct ExperimentArgs {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

int run_experiment(const ExperimentArgs& args) {
  rkde::ExperimentConfig config = rkde::ExperimentConfig::load(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (!config.seed)
    throw std::invalid_argument("no seed: give --seed or a \"seed\" key in the config");
  config.threads = args.threads;

  const rkde::ExperimentResult result =
      rkde::run(config, [](const std::string& line) { std::cerr << line << '\n'; });
  rkde::export_result(result, args.out);
  std::cerr << "wrote " << args.out << " and " << args.out << ".json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mirror-image kernel density estimation and plug-in Renyi-alpha "
               "divergence on the unit cube"};
  app.set_version_flag("--version", std::string(rkde::version));
  app.require_subcommand(1);

  ValidateKernelArgs vk;
  CLI::App* vk_cmd = app.add_subcommand(
      "validate-kernel", "Check kernel axioms (unit integral, vanishing moments) "
                         "and print a JSON report; exit 1 if any check fails");
  vk_cmd->add_option("--kernel", vk.kernel, "kernel name: epanechnikov or uniform")
      ->capture_default_str();
  vk_cmd->add_option("--ell", vk.ell, "highest moment order to check (dimensionless)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  vk_cmd->add_option("--tol", vk.tol, "absolute tolerance per check (dimensionless)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SampleArgs sa;
  CLI::App* sample_cmd = app.add_subcommand(
      "sample", "Draw points from a truncated Gaussian on [0,1]^d and write CSV "
                "(d columns, no header unless --header)");
  sample_cmd->add_option("--mean", sa.mean, "per-axis means, comma-separated (cube units)")
      ->required()
      ->delimiter(',');
  auto* var_opt =
      sample_cmd
          ->add_option("--var", sa.var,
                       "per-axis variances (sigma^2), one value or comma list")
          ->delimiter(',');
  auto* sd_opt =
      sample_cmd
          ->add_option("--sd", sa.sd,
                       "per-axis standard deviations (sigma), one value or comma list")
          ->delimiter(',');
  var_opt->excludes(sd_opt);
  sd_opt->excludes(var_opt);
  sample_cmd->add_option("--n", sa.n, "number of points to draw (count, >= 1)")
      ->required()
      ->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", sa.seed, "RNG seed (unsigned 64-bit)")->required();
  sample_cmd->add_option("--out", sa.out, "output CSV path")->required();
  sample_cmd->add_flag("--header", sa.header, "write an x1..xd header row");

  EstimateArgs ea;
  CLI::App* est_cmd = app.add_subcommand(
      "estimate", "Fit mirrored KDEs to two CSV samples and print the plug-in "
                  "Renyi-alpha divergence as JSON");
  est_cmd->add_option("--samples-p", ea.samples_p, "CSV of points from p (d columns)")
      ->required()
      ->check(CLI::ExistingFile);
  est_cmd->add_option("--samples-q", ea.samples_q, "CSV of points from q (d columns)")
      ->required()
      ->check(CLI::ExistingFile);
  est_cmd->add_option("--alpha", ea.alpha, "divergence order, > 0 and != 1")->required();
  est_cmd
      ->add_option("--bandwidth", ea.bandwidth, "kernel bandwidth h in (0, 0.5), cube units")
      ->required();
  est_cmd->add_option("--kernel", ea.kernel, "kernel name: epanechnikov or uniform")
      ->capture_default_str();
  est_cmd->add_option("--kappa1", ea.kappa1, "lower density clip (> 0)")->required();
  est_cmd->add_option("--kappa2", ea.kappa2, "upper density clip (>= kappa1)")->required();
  est_cmd
      ->add_option("--quad-m", ea.quad_m,
                   "Gauss-Legendre points per axis for d <= 3 (count)")
      ->check(CLI::Range(2, 1024))
      ->capture_default_str();
  est_cmd
      ->add_option("--qmc-points", ea.qmc_points,
                   "quasi-Monte Carlo points for d > 3 (count)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--out", ea.out, "write JSON here instead of stdout");

  BoundsArgs ba;
  CLI::App* bounds_cmd = app.add_subcommand(
      "bounds", "Print the explicit constants and finite-sample bias/variance/"
                "concentration/MSE bounds as JSON");
  bounds_cmd->add_option("--alpha", ba.alpha, "divergence order, > 0 and != 1")->required();
  bounds_cmd->add_option("--kappa1", ba.kappa1, "lower density clip (> 0)")->required();
  bounds_cmd->add_option("--kappa2", ba.kappa2, "upper density clip (>= kappa1)")->required();
  bounds_cmd->add_option("--beta", ba.beta, "Holder smoothness order (> 0)")->required();
  bounds_cmd->add_option("--L", ba.L, "Holder constant (> 0)")->required();
  bounds_cmd->add_option("--r", ba.r, "Holder norm index (>= 1)")->required();
  bounds_cmd->add_option("--d", ba.d, "dimension (count, >= 1)")
      ->required()
      ->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--n", ba.n, "sample size (count, >= 1)")
      ->required()
      ->check(CLI::PositiveNumber);
  bounds_cmd
      ->add_option("--bandwidth", ba.bandwidth,
                   "bandwidth h in (0, 0.5) for the bias bound (cube units)")
      ->required();
  bounds_cmd->add_option("--kernel", ba.kernel, "kernel name: epanechnikov or uniform")
      ->capture_default_str();
  bounds_cmd->add_option("--epsilon", ba.epsilons,
                         "deviation(s) for the concentration bound; repeatable");
  bounds_cmd->add_flag("--no-prefactor", ba.no_prefactor,
                       "drop the C_f C_L/(|alpha-1| kappa1) prefactor from the bias bound");
  bounds_cmd->add_option("--out", ba.out, "write JSON here instead of stdout");

  ExperimentArgs xa;
  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "Run the Monte Carlo sweep described by a JSON config; write a "
                    "CSV of per-n statistics plus a JSON sidecar");
  exp_cmd->add_option("--config", xa.config_path, "experiment config JSON path")
      ->required()
      ->check(CLI::ExistingFile);
  exp_cmd->add_option("--out", xa.out, "output CSV path (sidecar at <out>.json)")
      ->required();
  std::uint64_t seed_flag = 0;
  CLI::Option* seed_opt = exp_cmd->add_option(
      "--seed", seed_flag, "master seed; overrides the config's seed (unsigned 64-bit)");
  exp_cmd->add_option("--threads", xa.threads,
                      "worker threads for trials; 0 means all cores (count)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*vk_cmd) return run_validate_kernel(vk);
    if (*sample_cmd) return run_sample(sa);
    if (*est_cmd) return run_estimate(ea);
    if (*bounds_cmd) return run_bounds(ba);
    if (*exp_cmd) {
      if (seed_opt->count() > 0) xa.seed = seed_flag;
      return run_experiment(xa);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
