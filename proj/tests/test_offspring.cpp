#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "extinctia/errors.hpp"
#include "extinctia/offspring.hpp"

using extinctia::DomainError;
using extinctia::OffspringDistribution;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

OffspringDistribution binary(double p) { return OffspringDistribution::binary_splitting(p); }

}  // namespace

TEST_CASE("pgf values") {
  const auto d = binary(0.5);
  CHECK(d.pgf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d.pgf(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.pgf(0.5) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(OffspringDistribution({0.1, 0.2, 0.3, 0.4}).pgf(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(d.pgf(-0.1), DomainError);
  CHECK_THROWS_AS(d.pgf(1.5), DomainError);
}

TEST_CASE("mean and variance") {
  CHECK(binary(0.5).mean() == 1.0);
  CHECK(OffspringDistribution({1.0}).mean() == 0.0);
  CHECK(OffspringDistribution({0.2, 0.0, 0.8}).mean() == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(binary(0.5).variance() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("construction validates and strips trailing zeros") {
  CHECK_THROWS_AS(OffspringDistribution({0.5, 0.49}), DomainError);
  CHECK_THROWS_AS(OffspringDistribution({0.5, -0.1, 0.6}), DomainError);
  CHECK_THROWS_AS(OffspringDistribution({}), DomainError);
  const OffspringDistribution d({0.3, 0.7, 0.0, 0.0});
  CHECK(d.max_offspring() == 1);
  CHECK(OffspringDistribution({1.0, 0.0}).max_offspring() == 0);
  CHECK(OffspringDistribution({0.0, 0.4, 0.6}).min_offspring() == 1);
}

TEST_CASE("truncated constructors keep normalization and mean") {
  const auto pois = OffspringDistribution::truncated_poisson(1.5);
  double s = 0.0;
  for (double p : pois.probs()) s += p;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pois.mean() == doctest::Approx(1.5).epsilon(1e-10));
  const auto geo = OffspringDistribution::truncated_geometric(0.5);
  CHECK(geo.mean() == doctest::Approx(1.0).epsilon(1e-10));  // r / (1 - r)
}

TEST_CASE("log-MGF values and sentinels") {
  const auto d = binary(0.5);
  CHECK(d.log_mgf(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d.log_mgf_d1(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // g'(t) = 2 e^{2t} / (1 + e^{2t}); e^{2t} = 0.25 at t = log 0.5.
  CHECK(d.log_mgf_d1(std::log(0.5)) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(d.log_mgf(-kInf) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(d.log_mgf_d1(-kInf) == 0.0);
  CHECK(d.log_mgf_d1(kInf) == 2.0);
  CHECK_THROWS_AS(OffspringDistribution({0.0, 0.5, 0.5}).log_mgf(-kInf), DomainError);
  CHECK_THROWS_AS(d.log_mgf(std::nan("")), DomainError);
}

TEST_CASE("log-MGF is overflow safe") {
  const auto d = OffspringDistribution::truncated_poisson(3.0);
  const double L = static_cast<double>(d.max_offspring());
  const double g = d.log_mgf(800.0);
  CHECK(std::isfinite(g));
  // g(t) ~ tL + log p_L for large t.
  CHECK(g == doctest::Approx(800.0 * L + std::log(d.prob(d.max_offspring()))).epsilon(1e-12));
  CHECK(std::isfinite(d.log_mgf(-800.0)));
}

TEST_CASE("log-MGF properties on random distributions") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> probs(2 + trial % 5);
    double s = 0.0;
    for (double& p : probs) s += (p = U(gen) + 0.01);
    for (double& p : probs) p /= s;
    const OffspringDistribution d(probs);
    const double L = static_cast<double>(d.max_offspring());

    for (int k = 0; k < 20; ++k) {
      const double t1 = -6.0 + 12.0 * U(gen), t2 = -6.0 + 12.0 * U(gen);
      const double lam = U(gen);
      // Convexity.
      CHECK(d.log_mgf(lam * t1 + (1 - lam) * t2) <= lam * d.log_mgf(t1) + (1 - lam) * d.log_mgf(t2) + 1e-10);
      // Derivatives vs central differences.
      const double h = 1e-5;
      const double fd1 = (d.log_mgf(t1 + h) - d.log_mgf(t1 - h)) / (2 * h);
      const double fd2 = (d.log_mgf_d1(t1 + h) - d.log_mgf_d1(t1 - h)) / (2 * h);
      CHECK(std::abs(fd1 - d.log_mgf_d1(t1)) <= 1e-6 * std::max(1.0, std::abs(fd1)));
      CHECK(std::abs(fd2 - d.log_mgf_d2(t1)) <= 1e-6 * std::max(1.0, std::abs(fd2)));
      // Bounds of g'.
      CHECK(d.log_mgf_d1(t1) > 0.0);
      CHECK(d.log_mgf_d1(t1) < L);
      // g(log s) = log f(s).
      const double sp = 0.001 + 0.999 * U(gen);
      CHECK(std::abs(d.log_mgf(std::log(sp)) - std::log(d.pgf(sp))) <= 1e-12);
    }
    CHECK(d.log_mgf_d1(40.0) == doctest::Approx(L).epsilon(1e-9));
    CHECK(d.log_mgf_d1(-40.0) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("pgf iterates") {
  const auto it = extinctia::pgf_iterates(binary(0.5), 2);
  REQUIRE(it.q.size() == 3);
  CHECK(it.q[0] == 0.0);
  CHECK(it.q[1] == 0.5);
  CHECK(it.q[2] == doctest::Approx(0.625).epsilon(1e-15));
  const auto dead = extinctia::pgf_iterates(OffspringDistribution({1.0}), 3);
  CHECK(dead.q == std::vector<double>{0.0, 1.0, 1.0, 1.0});
  // f(0.625) = 0.6953125, f(0.6953125) = 0.741729736328125 (hand iteration).
  CHECK(extinctia::pgf_iterates(binary(0.5), 4).q[4] == doctest::Approx(0.741729736328125).epsilon(1e-15));
  CHECK_THROWS_AS(extinctia::pgf_iterates(binary(0.5), 0), DomainError);
}

TEST_CASE("pgf iterates: monotone and equal to log-domain iteration") {
  for (const auto& d : {binary(0.2), binary(0.5), binary(0.8), OffspringDistribution({0.3, 0.3, 0.2, 0.2}),
                        OffspringDistribution::truncated_poisson(1.2)}) {
    const auto it = extinctia::pgf_iterates(d, 10);
    // Independent route: g_n(-inf) = g(g_{n-1}(-inf)), g_1(-inf) = log p_0.
    double gn = d.log_mgf(-kInf);
    for (std::size_t n = 1; n <= 10; ++n) {
      CHECK(it.q[n] >= it.q[n - 1]);
      CHECK(std::abs(it.q[n] - d.pgf(it.q[n - 1])) <= 1e-14);
      CHECK(std::abs(std::exp(gn) - it.q[n]) <= 1e-10);
      gn = d.log_mgf(gn);
    }
  }
}

TEST_CASE("exact extinction probability") {
  CHECK(extinctia::extinction_prob_exact(binary(0.5), 1, 2) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(extinctia::extinction_prob_exact(OffspringDistribution({1.0}), 1000, 3) == 1.0);
  CHECK(extinctia::extinction_prob_exact(binary(0.5), 20, 4) ==
        doctest::Approx(std::pow(0.741729736328125, 20)).epsilon(1e-13));
  CHECK(extinctia::extinction_prob_exact(binary(0.5), 20, 4) == doctest::Approx(2.5404684688764938e-3).epsilon(1e-12));
}
