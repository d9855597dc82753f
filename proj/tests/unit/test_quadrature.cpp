#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include <rkde/quadrature.hpp>

using rkde::quad::composite_gauss_legendre_on;
using rkde::quad::gauss_legendre;
using rkde::quad::gauss_legendre_on;
using rkde::quad::integrate_adaptive;
using rkde::quad::Rule1d;
using rkde::quad::TensorRule;
using rkde::quad::tensor_gauss_legendre_01;

TEST_CASE("five-point rule reproduces the classical nodes and weights", "[quadrature]") {
  const Rule1d r = gauss_legendre(5);
  REQUIRE(r.nodes.size() == 5);
  const double n2 = 0.906179845938664;
  const double n1 = 0.5384693101056831;
  const double w2 = 0.23692688505618942;
  const double w1 = 0.4786286704993662;
  const double w0 = 0.568888888888889;
  CHECK(r.nodes[0] == Catch::Approx(-n2).margin(1e-15));
  CHECK(r.nodes[1] == Catch::Approx(-n1).margin(1e-15));
  CHECK(r.nodes[2] == Catch::Approx(0.0).margin(1e-15));
  CHECK(r.nodes[3] == Catch::Approx(n1).margin(1e-15));
  CHECK(r.nodes[4] == Catch::Approx(n2).margin(1e-15));
  CHECK(r.weights[0] == Catch::Approx(w2).margin(1e-15));
  CHECK(r.weights[1] == Catch::Approx(w1).margin(1e-15));
  CHECK(r.weights[2] == Catch::Approx(w0).margin(1e-15));
}

TEST_CASE("m-point rule is exact for polynomials up to degree 2m-1", "[quadrature]") {
  for (int m : {2, 3, 5, 8, 16}) {
    const Rule1d r = gauss_legendre_on(m, 0.0, 1.0);
    for (int deg = 0; deg <= 2 * m - 1; ++deg) {
      double acc = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i)
        acc += r.weights[i] * std::pow(r.nodes[i], deg);
      CHECK(acc == Catch::Approx(1.0 / (deg + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("weights are positive and sum to the interval length", "[quadrature]") {
  for (int m : {1, 2, 7, 20, 48, 96}) {
    const Rule1d r = gauss_legendre_on(m, 0.25, 0.75);
    double total = 0.0;
    for (double w : r.weights) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == Catch::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("composite rule agrees with a single panel on smooth integrands", "[quadrature]") {
  auto f = [](double x) { return std::exp(x) * std::cos(3.0 * x); };
  const Rule1d one = gauss_legendre_on(32, 0.0, 1.0);
  const Rule1d many = composite_gauss_legendre_on(8, 16, 0.0, 1.0);
  auto apply = [&](const Rule1d& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(r.nodes[i]);
    return acc;
  };
  CHECK(apply(one) == Catch::Approx(apply(many)).epsilon(1e-12));
}

TEST_CASE("adaptive integration meets tight tolerances", "[quadrature]") {
  const double sin10 = integrate_adaptive([](double x) { return std::sin(10.0 * x); }, 0.0, 1.0, 1e-12);
  CHECK(sin10 == Catch::Approx((1.0 - std::cos(10.0)) / 10.0).margin(1e-11));

  // Kinked integrand: |x - 0.3| has exact integral 0.29 on [0,1].
  const double kink = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-10);
  CHECK(kink == Catch::Approx(0.29).margin(1e-9));

  const double empty = integrate_adaptive([](double) { return 1.0; }, 0.4, 0.4, 1e-10);
  CHECK(empty == 0.0);
}

TEST_CASE("adaptive integration rejects non-finite integrands", "[quadrature]") {
  auto bad = [](double x) {
    return x < 0.5 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(integrate_adaptive(bad, 0.0, 1.0, 1e-10), std::runtime_error);
}

TEST_CASE("tensor rule enumerates the last axis fastest", "[quadrature]") {
  TensorRule rule = tensor_gauss_legendre_01(3, 2);
  REQUIRE(rule.dim() == 2);
  REQUIRE(rule.total_points() == 9);
  const auto& axis = rule.axes[0];
  std::vector<std::pair<double, double>> seen;
  rule.for_each([&](std::span<const double> x, double) {
    seen.emplace_back(x[0], x[1]);
  });
  REQUIRE(seen.size() == 9);
  // First block keeps axis 0 at its first node while axis 1 sweeps.
  for (int k = 0; k < 3; ++k) {
    CHECK(seen[static_cast<std::size_t>(k)].first == axis.nodes[0]);
    CHECK(seen[static_cast<std::size_t>(k)].second == axis.nodes[static_cast<std::size_t>(k)]);
  }
  CHECK(seen[3].first == axis.nodes[1]);
}

TEST_CASE("tensor rule integrates separable polynomials on the cube", "[quadrature]") {
  TensorRule rule = tensor_gauss_legendre_01(6, 3);
  const double got = rule.integrate([](std::span<const double> x) {
    return x[0] * x[1] * x[1] * (1.0 + x[2]);
  });
  // Exact: 1/2 * 1/3 * 3/2 = 1/4.
  CHECK(got == Catch::Approx(0.25).epsilon(1e-14));

  double volume = 0.0;
  rule.for_each([&](std::span<const double>, double w) { volume += w; });
  CHECK(volume == Catch::Approx(1.0).epsilon(1e-14));
}
