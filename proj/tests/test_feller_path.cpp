#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "extinctia/errors.hpp"
#include "extinctia/feller_path.hpp"

using namespace extinctia;

namespace {

const double kInf = std::numeric_limits<double>::infinity();
// 2 / (1 - e^{-1}) and -2 / (1 - e), from the Euler-Lagrange solution.
const double kRateAlpha1 = 3.163953413738653;
const double kRateAlphaMinus1 = 1.163953413738653;

double simpson(auto f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("most likely path: boundary values and examples") {
  for (double a : {-1.5, 0.0, 0.7}) {
    const FellerModel m{a, 1.3, 2.0, 1.0};
    CHECK(most_likely_path_cont(m, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(most_likely_path_cont(m, 2.0) == 0.0);
  }
  CHECK(most_likely_path_cont({0.0, 1.0, 1.0, 1.0}, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(most_likely_path_cont({1.0, 1.0, 1.0, 1.0}, 0.5) == doctest::Approx(0.23500371220159458).epsilon(1e-14));
  CHECK_THROWS_AS(most_likely_path_cont({1.0, 1.0, 1.0, 1.0}, 1.1), DomainError);
  CHECK_THROWS_AS(most_likely_path_cont({1.0, 1.0, 1.0, 1.0}, -0.1), DomainError);
}

TEST_CASE("most likely path: alpha symmetry") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double a = U(gen);
    for (int k = 0; k <= 100; ++k) {
      const double t = k / 100.0;
      CHECK(std::abs(most_likely_path_cont({a, 1.0, 1.0, 1.0}, t) - most_likely_path_cont({-a, 1.0, 1.0, 1.0}, t)) < 1e-12);
    }
  }
}

TEST_CASE("most likely path: Euler-Lagrange residual and control equation") {
  for (double a : {-2.0, -0.5, 0.5, 2.0}) {
    const FellerModel m{a, 1.0, 1.0, 1.0};
    const double h = 1e-4;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double vm = optimal_v_cont(m, t - h), v0 = optimal_v_cont(m, t), vp = optimal_v_cont(m, t + h);
      CHECK(std::abs((vp - 2 * v0 + vm) / (h * h) - a * a / 4.0 * v0) < 1e-6 * std::max(1.0, a * a));
      // v' = (alpha/2) v + w/2.
      CHECK((vp - vm) / (2 * h) == doctest::Approx(a / 2.0 * v0 + optimal_control_cont(m, t) / 2.0).epsilon(1e-7));
    }
  }
}

TEST_CASE("optimal control meets the terminal constraint") {
  for (double a : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0}) {
    const FellerModel m{a, 1.0, 1.5, 1.0};
    const double lhs = 0.5 * simpson([&](double t) { return std::exp(-a * t / 2.0) * optimal_control_cont(m, t); }, 0.0, m.T, 2000);
    CHECK(std::abs(lhs + 1.0) < 1e-8);
  }
}

TEST_CASE("closed form, printed constants and small-alpha continuity") {
  CHECK(closed_form_exponent({0.0, 1.0, 1.0, 2.0}) == 2.0);
  CHECK(closed_form_exponent({1.0, 1.0, 1.0, 1.0}) == doctest::Approx(kRateAlpha1).epsilon(1e-14));
  CHECK(printed_theorem_exponent({1.0, 1.0, 1.0, 1.0}) == doctest::Approx(kRateAlpha1 / 2).epsilon(1e-14));
  CHECK(printed_theorem_exponent({0.0, 1.0, 1.0, 1.0}) == 1.0);
  CHECK(printed_corollary_alpha0_exponent({0.0, 1.0, 1.0, 1.0}) == 0.5);
  CHECK(std::abs(closed_form_exponent({1e-8, 1.0, 1.0, 1.0}) - closed_form_exponent({0.0, 1.0, 1.0, 1.0})) < 1e-6);
  CHECK(std::abs(closed_form_exponent({1e-11, 1.0, 1.0, 1.0}) - 2.0) < 1e-10);
}

TEST_CASE("closed form monotonicity") {
  const double d = 1e-4;
  for (double a : {-2.0, -0.5, 0.0, 0.5, 2.0})
    for (double s2 : {0.5, 1.0, 2.0})
      for (double T : {0.5, 1.0, 2.0}) {
        const double base = closed_form_exponent({a, s2, T, 1.0});
        CHECK(closed_form_exponent({a + d, s2, T, 1.0}) > base);
        CHECK(closed_form_exponent({a, s2, T + d, 1.0}) < base);
        CHECK(closed_form_exponent({a, s2 + d, T, 1.0}) < base);
      }
}

TEST_CASE("rate quadrature") {
  const FellerModel m1{1.0, 1.0, 1.0, 1.0};
  std::vector<double> growth(401);
  for (std::size_t k = 0; k < growth.size(); ++k) growth[k] = std::exp(1.0 * k / 400.0);
  CHECK(rate_quadrature(m1, ContinuousPathGrid::from_u(1.0, growth)) < 1e-10);

  const FellerModel m0{0.0, 1.0, 1.0, 1.0};
  CHECK(std::abs(rate_quadrature(m0, sample_most_likely_path(m0, 1000)) - 2.0) < 5e-3);
  CHECK(std::abs(rate_quadrature(m1, sample_most_likely_path(m1, 2000)) - kRateAlpha1) < 5e-3);

  auto bad = sample_most_likely_path(m1, 10);
  bad.u[0] = 0.9;
  bad.v[0] = std::sqrt(0.9);
  CHECK(rate_quadrature(m1, bad) == kInf);
  auto resurrect = sample_most_likely_path(m1, 10);
  resurrect.u[5] = resurrect.v[5] = 0.0;
  CHECK(rate_quadrature(m1, resurrect) == kInf);
}

TEST_CASE("rate quadrature converges to the variational value") {
  for (double a : {-1.0, 0.0, 1.5}) {
    const FellerModel m{a, 0.7, 1.3, 1.0};
    double prev = kInf;
    for (std::size_t n : {64, 128, 256, 512, 1024}) {
      const double gap = std::abs(rate_quadrature(m, sample_most_likely_path(m, n)) - variational_oracle(m, n).value);
      CHECK(gap <= prev * 0.55 + 1e-13);  // at least first order
      prev = gap;
    }
  }
}

TEST_CASE("variational oracle examples") {
  const auto r0 = variational_oracle({0.0, 1.0, 1.0, 1.0}, 512);
  CHECK(std::abs(r0.value - 2.0) < 1e-3);
  for (std::size_t k = 0; k <= 512; ++k) CHECK(r0.path.v[k] == doctest::Approx(1.0 - k / 512.0).epsilon(1e-10));

  const auto r1 = variational_oracle({1.0, 1.0, 1.0, 1.0}, 1024);
  CHECK(std::abs(r1.value - kRateAlpha1) < 1e-3);
  const auto rm1 = variational_oracle({-1.0, 1.0, 1.0, 1.0}, 1024);
  CHECK(std::abs(rm1.value - kRateAlphaMinus1) < 1e-3);
  // Same minimizing path for +-alpha; values differ by exactly 2 alpha / sigma^2.
  CHECK(r1.value - rm1.value == doctest::Approx(2.0).epsilon(1e-6));
  for (std::size_t k = 0; k <= 1024; k += 64) CHECK(std::abs(r1.path.u[k] - rm1.path.u[k]) < 1e-6);

  // Minimizer matches the closed-form path at O(h^2).
  for (std::size_t k = 0; k <= 1024; ++k)
    CHECK(std::abs(r1.path.u[k] - most_likely_path_cont({1.0, 1.0, 1.0, 1.0}, r1.path.time(k))) < 1e-5);

  CHECK_THROWS_AS(variational_oracle({1.0, 1.0, 1.0, 1.0}, 4), ConfigError);
  CHECK_THROWS_AS(variational_oracle({50.0, 1.0, 1.0, 1.0}, 8), SolverError);
}

TEST_CASE("variational oracle converges at second order") {
  const FellerModel m{1.0, 1.0, 1.0, 1.0};
  const double e1 = std::abs(variational_oracle(m, 64).value - kRateAlpha1);
  const double e2 = std::abs(variational_oracle(m, 128).value - kRateAlpha1);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("riccati oracle") {
  CHECK(std::abs(riccati_exponent_oracle({0.0, 1.0, 1.0, 1.0}, 1e9, 1000) - 2.0) < 1e-6);
  CHECK(std::abs(riccati_exponent_oracle({1.0, 1.0, 1.0, 1.0}, 1e9, 1000) - kRateAlpha1) < 1e-5);
  const FellerModel m{0.5, 1.0, 1.0, 1.0};
  const double a = riccati_exponent_oracle(m, 1e6, 2000), b = riccati_exponent_oracle(m, 1e8, 2000),
               c = riccati_exponent_oracle(m, 1e10, 2000);
  CHECK(a < b);
  CHECK(b < c);
  CHECK_THROWS_AS(riccati_exponent_oracle(m, 1e5, 2000), DomainError);
  CHECK_THROWS_AS(riccati_exponent_oracle(m, 1e9, 999), DomainError);
}

TEST_CASE("oracle agreement over the parameter sweep") {
  for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0})
    for (double s2 : {0.5, 1.0, 2.0})
      for (double T : {0.5, 1.0, 2.0}) {
        const FellerModel m{a, s2, T, 1.0};
        const double var = variational_oracle(m, 4096).value;
        const double ric = riccati_exponent_oracle(m, 1e8, 10000);
        CHECK(std::abs(var - ric) <= 1e-5 * ric);
        CHECK(std::abs(ric - closed_form_exponent(m)) <= 1e-6 * ric);
      }
}

TEST_CASE("exponent report adjudicates the printed constants") {
  const auto r0 = extinction_exponent_report({0.0, 1.0, 1.0, 2.0}, 1024);
  CHECK(r0.closed_form_value == 2.0);
  CHECK(r0.paper_printed_value == 1.0);
  CHECK(r0.corollary_printed_value == 0.5);
  CHECK(r0.discrepancy_flag);
  CHECK(r0.corollary_discrepancy_flag);
  CHECK_FALSE(r0.path_prefactor_flag);  // prefactor is 1 at alpha = 0
  CHECK(r0.extinction_probability == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(std::abs(r0.variational_value - 2.0) < 1e-3);
  CHECK(std::abs(r0.riccati_value - 2.0) < 1e-6);

  const auto r1 = extinction_exponent_report({1.0, 1.0, 1.0, 1.0}, 1024);
  CHECK(r1.closed_form_value == doctest::Approx(kRateAlpha1).epsilon(1e-14));
  CHECK(r1.paper_printed_value == doctest::Approx(1.5819767068693265).epsilon(1e-14));
  CHECK(r1.discrepancy_flag);
  CHECK(r1.path_prefactor_flag);
}
