#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("RKDE_CLI");
  REQUIRE(p != nullptr);
  return p;
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    r.output.append(buf.data(), got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
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

TEST_CASE("version and help exit cleanly", "[cli]") {
  const auto version = run_cli("--version");
  CHECK(version.exit_code == 0);
  CHECK(version.output.find("0.1.0") != std::string::npos);
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("sample --help").exit_code == 0);
}

TEST_CASE("usage errors exit with code one", "[cli]") {
  CHECK(run_cli("").exit_code == 1);                   // subcommand required
  CHECK(run_cli("frobnicate").exit_code == 1);         // unknown subcommand
  CHECK(run_cli("estimate --bogus 1").exit_code == 1); // unknown flag
}

TEST_CASE("kernel validation reports moments and pass state", "[cli]") {
  const auto pass = run_cli("validate-kernel --kernel epanechnikov --ell 1");
  CHECK(pass.exit_code == 0);
  const json jp = json::parse(pass.output);
  CHECK(jp.at("ok") == true);
  CHECK(jp.at("moments").size() == 2);

  const auto fail = run_cli("validate-kernel --kernel epanechnikov --ell 2");
  CHECK(fail.exit_code == 1);
  const json jf = json::parse(fail.output);
  CHECK(jf.at("ok") == false);
  CHECK(jf.at("first_failed_moment") == 2);
  CHECK(std::abs(jf.at("moments")[2].at("value").get<double>() - 0.2) < 1e-9);

  CHECK(run_cli("validate-kernel --kernel gaussian").exit_code == 1);
}

TEST_CASE("sampling writes deterministic CSV and enforces its flags", "[cli]") {
  FileGuard a{temp_file("rkde_cli_a.csv")}, b{temp_file("rkde_cli_b.csv")};
  const std::string common = "sample --mean 0.3,0.5,0.7 --var 0.2 --n 50 --out ";
  CHECK(run_cli(common + a.path.string() + " --seed 7").exit_code == 0);
  CHECK(run_cli(common + b.path.string() + " --seed 7").exit_code == 0);
  const std::string bytes_a = slurp(a.path);
  CHECK(bytes_a == slurp(b.path));
  CHECK(std::count(bytes_a.begin(), bytes_a.end(), '\n') == 50);

  CHECK(run_cli(common + b.path.string() + " --seed 8").exit_code == 0);
  CHECK(bytes_a != slurp(b.path));

  // Header flag adds exactly one row.
  CHECK(run_cli(common + b.path.string() + " --seed 7 --header").exit_code == 0);
  const std::string with_header = slurp(b.path);
  CHECK(with_header.substr(0, 9) == "x1,x2,x3\n");
  CHECK(with_header.substr(9) == bytes_a);

  // Seed is mandatory; var and sd are mutually exclusive.
  CHECK(run_cli("sample --mean 0.5 --var 0.2 --n 5 --out " + b.path.string()).exit_code == 1);
  CHECK(run_cli("sample --mean 0.5 --var 0.2 --sd 0.4 --n 5 --seed 1 --out " +
                b.path.string())
            .exit_code == 1);
  CHECK(run_cli("sample --mean 0.5,0.5 --var 0.1,0.1,0.1 --n 5 --seed 1 --out " +
                b.path.string())
            .exit_code == 1);
}

TEST_CASE("a distribution with no mass in the cube exits with code two", "[cli]") {
  FileGuard out{temp_file("rkde_cli_path.csv")};
  const auto r = run_cli("sample --mean -50 --var 0.0001 --n 5 --seed 1 --out " +
                         out.path.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("estimation consumes two sample files and emits JSON", "[cli]") {
  FileGuard p{temp_file("rkde_cli_p.csv")}, q{temp_file("rkde_cli_q.csv")};
  REQUIRE(run_cli("sample --mean 0.3,0.3 --var 0.2 --n 400 --seed 11 --out " +
                  p.path.string())
              .exit_code == 0);
  REQUIRE(run_cli("sample --mean 0.7,0.7 --var 0.2 --n 400 --seed 12 --out " +
                  q.path.string())
              .exit_code == 0);

  const auto est = run_cli("estimate --samples-p " + p.path.string() + " --samples-q " +
                           q.path.string() +
                           " --alpha 0.8 --bandwidth 0.2 --kappa1 0.2 --kappa2 1.7");
  REQUIRE(est.exit_code == 0);
  const json j = json::parse(est.output);
  CHECK(j.at("value").get<double>() > 0.0);
  CHECK(j.at("integral").get<double>() > 0.0);
  CHECK(j.at("quadrature_report").at("method") == "gauss-legendre");
  CHECK(j.at("quadrature_report").at("points") == 48 * 48);

  // --out writes the same JSON to a file.
  FileGuard out{temp_file("rkde_cli_est.json")};
  const auto est2 = run_cli("estimate --samples-p " + p.path.string() + " --samples-q " +
                            q.path.string() +
                            " --alpha 0.8 --bandwidth 0.2 --kappa1 0.2 --kappa2 1.7 --out " +
                            out.path.string());
  REQUIRE(est2.exit_code == 0);
  CHECK(json::parse(slurp(out.path)) == j);
}

TEST_CASE("estimation rejects bad inputs with code one", "[cli]") {
  FileGuard p{temp_file("rkde_cli_p1.csv")}, q{temp_file("rkde_cli_q3.csv")};
  REQUIRE(run_cli("sample --mean 0.3 --var 0.2 --n 20 --seed 1 --out " + p.path.string())
              .exit_code == 0);
  REQUIRE(run_cli("sample --mean 0.7,0.7,0.7 --var 0.2 --n 20 --seed 2 --out " +
                  q.path.string())
              .exit_code == 0);
  const std::string both =
      " --samples-p " + p.path.string() + " --samples-q " + q.path.string();

  // Mismatched dimensions.
  CHECK(run_cli("estimate" + both + " --alpha 0.8 --bandwidth 0.2 --kappa1 0.1 --kappa2 2")
            .exit_code == 1);
  // Bandwidth outside (0, 1/2).
  CHECK(run_cli("estimate --samples-p " + p.path.string() + " --samples-q " +
                p.path.string() + " --alpha 0.8 --bandwidth 0.5 --kappa1 0.1 --kappa2 2")
            .exit_code == 1);
  // Missing sample file.
  CHECK(run_cli("estimate --samples-p /nonexistent.csv --samples-q " + q.path.string() +
                " --alpha 0.8 --bandwidth 0.2 --kappa1 0.1 --kappa2 2")
            .exit_code == 1);
  // Sampling seeds make no sense here.
  CHECK(run_cli("estimate" + both +
                " --alpha 0.8 --bandwidth 0.2 --kappa1 0.1 --kappa2 2 --seed 5")
            .exit_code == 1);
}

TEST_CASE("bounds prints constants and per-epsilon concentration", "[cli]") {
  const auto r = run_cli(
      "bounds --alpha 0.8 --kappa1 0.2 --kappa2 1.7 --beta 2 --L 1 --r 2 --d 3 "
      "--n 1000 --bandwidth 0.25 --epsilon 0.05 --epsilon 0.1");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j.at("constants").at("k1").get<double>() > 0.0);
  const double c = j.at("constants").at("mcdiarmid_c").get<double>();
  CHECK(j.at("constants").at("k1").get<double>() == Catch::Approx(c * c));
  CHECK(j.at("bounds").at("bias").get<double>() > 0.0);
  CHECK(j.at("bounds").at("variance").get<double>() > 0.0);
  CHECK(j.at("bounds").at("optimal_bandwidth").get<double>() ==
        Catch::Approx(std::pow(1000.0, -0.2)));
  REQUIRE(j.at("bounds").at("concentration").size() == 2);
  CHECK(j.at("bounds").at("concentration")[0].at("epsilon") == 0.05);

  // Dropping the prefactor rescales the bias coefficients.
  const auto bare = run_cli(
      "bounds --alpha 0.8 --kappa1 0.2 --kappa2 1.7 --beta 2 --L 1 --r 2 --d 3 "
      "--n 1000 --bandwidth 0.25 --no-prefactor");
  REQUIRE(bare.exit_code == 0);
  const json jb = json::parse(bare.output);
  CHECK(jb.at("constants").at("prefactor") == 1.0);
  CHECK(jb.at("bounds").at("bias").get<double>() <
        j.at("bounds").at("bias").get<double>());

  // A kernel with too low a moment order for the requested smoothness.
  CHECK(run_cli("bounds --alpha 0.8 --kappa1 0.2 --kappa2 1.7 --beta 3.5 --L 1 --r 2 "
                "--d 1 --n 10 --bandwidth 0.2")
            .exit_code == 1);
}

TEST_CASE("experiments run from config files with seed overrides", "[cli]") {
  FileGuard cfg{temp_file("rkde_cli_cfg.json")};
  std::ofstream(cfg.path) << R"({
    "p": {"mean": [0.3], "variance": 0.2},
    "q": {"mean": [0.7], "variance": 0.2},
    "alpha": 0.8, "bandwidth": 0.25, "kernel": "epanechnikov",
    "n_grid": [15, 30], "trials": 3, "kappa1": 0.3, "kappa2": 1.5,
    "quad_m": 16, "seed": 5,
    "holder": {"beta": 2.0, "L": 1.0, "r": 2.0}
  })";

  FileGuard a{temp_file("rkde_cli_exp_a.csv")}, aj{temp_file("rkde_cli_exp_a.csv.json")};
  FileGuard b{temp_file("rkde_cli_exp_b.csv")}, bj{temp_file("rkde_cli_exp_b.csv.json")};
  const auto run1 = run_cli("experiment --config " + cfg.path.string() + " --out " +
                            a.path.string());
  REQUIRE(run1.exit_code == 0);
  REQUIRE(std::filesystem::exists(a.path));
  REQUIRE(std::filesystem::exists(aj.path));
  const std::string csv_a = slurp(a.path);
  CHECK(csv_a.rfind("n,mean_estimate,bias,variance,mse,bound\n", 0) == 0);

  // Same config, same seed: identical bytes.
  REQUIRE(run_cli("experiment --config " + cfg.path.string() + " --out " +
                  b.path.string())
              .exit_code == 0);
  CHECK(csv_a == slurp(b.path));

  // --seed overrides the config seed.
  REQUIRE(run_cli("experiment --config " + cfg.path.string() + " --out " +
                  b.path.string() + " --seed 6")
              .exit_code == 0);
  CHECK(csv_a != slurp(b.path));
  const json sidecar = json::parse(slurp(bj.path));
  CHECK(sidecar.at("config").at("seed") == 6);

  CHECK(run_cli("experiment --out " + b.path.string()).exit_code == 1);
  CHECK(run_cli("experiment --config /nonexistent.json --out " + b.path.string())
            .exit_code == 1);
}
