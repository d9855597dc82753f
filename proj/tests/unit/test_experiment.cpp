#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <rkde/experiment.hpp>

using nlohmann::json;
using rkde::ExperimentConfig;
using rkde::ExperimentResult;

namespace {

json base_config() {
  return json::parse(R"({
    "p": {"mean": [0.3], "variance": 0.2},
    "q": {"mean": [0.7], "variance": 0.2},
    "alpha": 0.8,
    "bandwidth": 0.25,
    "kernel": "epanechnikov",
    "n_grid": [20, 40],
    "trials": 4,
    "kappa1": 0.3,
    "kappa2": 1.5,
    "quad_m": 16,
    "seed": 99,
    "holder": {"beta": 2.0, "L": 1.0, "r": 2.0}
  })");
}

std::filesystem::path temp_file(const std::string& stem) {
  return std::filesystem::temp_directory_path() / stem;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct FileGuard {
  std::filesystem::path path;
  ~FileGuard() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("configs parse with broadcasting and auto markers", "[experiment]") {
  auto j = base_config();
  const auto cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.dim() == 1);
  CHECK(cfg.p.mean == std::vector<double>{0.3});
  CHECK(cfg.p.variance == std::vector<double>{0.2});  // scalar broadcast
  CHECK(cfg.alpha == 0.8);
  CHECK(cfg.trials == 4);
  REQUIRE(cfg.seed.has_value());
  CHECK(*cfg.seed == 99);

  j["p"] = {{"mean", {0.3, 0.4}}, {"variance", {0.2, 0.3}}};
  j["q"] = {{"mean", {0.7, 0.6}}, {"sd", 0.4}};
  j["kappa1"] = "auto";
  j["kappa2"] = "auto";
  j["holder"] = {{"beta", 2.0}, {"L", "auto"}, {"r", 2.0}};
  const auto cfg2 = ExperimentConfig::from_json(j);
  CHECK(cfg2.dim() == 2);
  REQUIRE(cfg2.q.variance.size() == 2);  // sd squared, broadcast to both axes
  CHECK(cfg2.q.variance[0] == Catch::Approx(0.16).epsilon(1e-15));
  CHECK(cfg2.q.variance[1] == Catch::Approx(0.16).epsilon(1e-15));
  CHECK(cfg2.kappa1_auto);
  CHECK(cfg2.kappa2_auto);
  CHECK(cfg2.L_auto);
}

TEST_CASE("config validation rejects malformed input", "[experiment]") {
  {
    auto j = base_config();
    j["typo_field"] = 1;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j["p"]["sd"] = 0.4;  // both variance and sd
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j["p"].erase("variance");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j.erase("seed");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j["q"]["mean"] = {0.7, 0.7};  // p/q dimension mismatch
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j["bandwidth"] = 0.5;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j["alpha"] = 1.0;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  {
    auto j = base_config();
    j["trials"] = 0;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
}

TEST_CASE("rows aggregate consistently against the ground truth", "[experiment]") {
  const auto cfg = ExperimentConfig::from_json(base_config());
  const ExperimentResult result = rkde::run(cfg);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.ground_truth == Catch::Approx(result.ground_truth_coarse).margin(1e-6));
  for (const auto& row : result.rows) {
    CHECK(std::isfinite(row.mean_estimate));
    CHECK(row.h == 0.25);
    CHECK(row.bias == Catch::Approx(row.mean_estimate - result.ground_truth).margin(1e-15));
    CHECK(row.variance >= 0.0);
    // Mean squared deviation from truth = bias^2 + (T-1)/T * unbiased variance.
    const double expected_mse =
        row.bias * row.bias + row.variance * (4.0 - 1.0) / 4.0;
    CHECK(row.mse == Catch::Approx(expected_mse).epsilon(1e-12));
    CHECK(row.mse_bias_plus_var ==
          Catch::Approx(row.bias * row.bias + row.variance).epsilon(1e-12));
    CHECK(row.bound_value > 0.0);
  }
}

TEST_CASE("auto bandwidth and auto constants resolve from the scenario", "[experiment]") {
  auto j = base_config();
  j["bandwidth"] = "auto";
  j["kappa1"] = "auto";
  j["kappa2"] = "auto";
  j["holder"] = {{"beta", 2.0}, {"L", "auto"}, {"r", 2.0}};
  const auto cfg = ExperimentConfig::from_json(j);
  const ExperimentResult result = rkde::run(cfg);
  // h = n^(-1/(d+beta)) per sweep point.
  CHECK(result.rows[0].h == Catch::Approx(std::pow(20.0, -1.0 / 3.0)).epsilon(1e-14));
  CHECK(result.rows[1].h == Catch::Approx(std::pow(40.0, -1.0 / 3.0)).epsilon(1e-14));
  // Resolved band covers the true 1-D density range.
  CHECK(result.holder_used.kappa1 > 0.0);
  CHECK(result.holder_used.kappa1 < 0.5);
  CHECK(result.holder_used.kappa2 > 1.0);
  CHECK(result.holder_used.L > 0.0);
}

TEST_CASE("requested smoothness is capped by the kernel order", "[experiment]") {
  auto j = base_config();
  j["holder"] = {{"beta", 3.5}, {"L", 1.0}, {"r", 2.0}};
  const auto cfg = ExperimentConfig::from_json(j);
  const ExperimentResult result = rkde::run(cfg);
  CHECK(result.beta_requested == 3.5);
  CHECK(result.beta_capped);
  CHECK(result.holder_used.beta == 2.0);
}

TEST_CASE("identical seeds reproduce byte-identical exports", "[experiment]") {
  const auto cfg = ExperimentConfig::from_json(base_config());
  FileGuard a{temp_file("rkde_exp_a.csv")}, aj{temp_file("rkde_exp_a.csv.json")};
  FileGuard b{temp_file("rkde_exp_b.csv")}, bj{temp_file("rkde_exp_b.csv.json")};
  rkde::export_result(rkde::run(cfg), a.path.string());
  rkde::export_result(rkde::run(cfg), b.path.string());
  const std::string csv_a = slurp(a.path);
  CHECK(csv_a == slurp(b.path));
  CHECK_FALSE(csv_a.empty());

  auto j = base_config();
  j["seed"] = 100;
  rkde::export_result(rkde::run(ExperimentConfig::from_json(j)), b.path.string());
  CHECK(csv_a != slurp(b.path));
}

TEST_CASE("results do not depend on the thread count", "[experiment]") {
  auto cfg = ExperimentConfig::from_json(base_config());
  cfg.threads = 1;
  FileGuard a{temp_file("rkde_exp_t1.csv")}, aj{temp_file("rkde_exp_t1.csv.json")};
  FileGuard b{temp_file("rkde_exp_t4.csv")}, bj{temp_file("rkde_exp_t4.csv.json")};
  rkde::export_result(rkde::run(cfg), a.path.string());
  cfg.threads = 4;
  rkde::export_result(rkde::run(cfg), b.path.string());
  CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("exports carry the pinned CSV schema and a JSON sidecar", "[experiment]") {
  const auto cfg = ExperimentConfig::from_json(base_config());
  FileGuard csv{temp_file("rkde_exp_schema.csv")};
  FileGuard sidecar{temp_file("rkde_exp_schema.csv.json")};
  rkde::export_result(rkde::run(cfg), csv.path.string());

  std::ifstream in(csv.path);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "n,mean_estimate,bias,variance,mse,bound");
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  REQUIRE(std::filesystem::exists(sidecar.path));
  const json side = json::parse(slurp(sidecar.path));
  CHECK(side.contains("version"));
  CHECK(side.contains("config"));
  CHECK(side.at("resolved").at("d") == 1);
  CHECK(side.at("resolved").contains("prefactor_included"));
  CHECK(side.at("ground_truth").contains("value"));
  CHECK(side.at("constants").contains("k1"));
  REQUIRE(side.at("rows").size() == 2);
  CHECK(side.at("rows")[0].contains("mse_bias_plus_var"));
  CHECK(side.at("rows")[0].at("n") == 20);
}

TEST_CASE("an empty sweep exports only the header", "[experiment]") {
  auto j = base_config();
  j["n_grid"] = json::array();
  const auto cfg = ExperimentConfig::from_json(j);
  FileGuard csv{temp_file("rkde_exp_empty.csv")};
  FileGuard sidecar{temp_file("rkde_exp_empty.csv.json")};
  rkde::export_result(rkde::run(cfg), csv.path.string());
  CHECK(slurp(csv.path) == "n,mean_estimate,bias,variance,mse,bound\n");
}

TEST_CASE("config serialization round-trips through JSON", "[experiment]") {
  auto j = base_config();
  j["kappa1"] = "auto";
  j["kappa2"] = "auto";
  j["bandwidth"] = "auto";
  const auto cfg = ExperimentConfig::from_json(j);
  const auto out = cfg.to_json();
  CHECK(out.at("kappa1") == "auto");
  CHECK(out.at("bandwidth") == "auto");
  const auto cfg2 = ExperimentConfig::from_json(json::parse(out.dump()));
  CHECK(cfg2.kappa1_auto == cfg.kappa1_auto);
  CHECK(cfg2.h_auto == cfg.h_auto);
  CHECK(cfg2.n_grid == cfg.n_grid);
  CHECK(cfg2.p.mean == cfg.p.mean);
}
