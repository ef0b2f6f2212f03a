#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "extinctia/feller_path.hpp"
#include "extinctia/offspring.hpp"
#include "extinctia/rng.hpp"

namespace extinctia {

/// Which extinct replicas feed the conditional mean path.
enum class Conditioning { at_horizon, by_horizon };  // tau == N, tau <= N

struct GwSimConfig {
  OffspringDistribution dist;
  std::uint64_t K = 1;
  std::size_t N = 1;
  std::uint64_t reps = 1;
  std::uint64_t seed = 0;
  Conditioning conditioning = Conditioning::at_horizon;

  void validate() const;
};

enum class FellerScheme { exact_poisson_gamma, euler_full_truncation };

struct FellerSimConfig {
  FellerModel model;
  FellerScheme scheme = FellerScheme::exact_poisson_gamma;
  std::size_t n_steps = 64;
  std::uint64_t reps = 1;
  std::uint64_t seed = 0;

  void validate() const;
  /// Non-fatal advisories (coarse Euler grid, too few reps for the event).
  std::vector<std::string> warnings() const;
};

struct McExtinctionResult {
  std::uint64_t reps = 0;
  std::uint64_t n_extinct = 0;  // tau within the horizon
  double frequency = 0.0;
  double std_error = 0.0;       // sqrt(f (1 - f) / reps)
  double wilson_low = 0.0;      // 95% Wilson score interval
  double wilson_high = 0.0;

  // Mean of X/K over the conditioning set on the simulation grid; empty
  // when the set is empty. Standard errors are per-entry.
  std::uint64_t n_conditioned = 0;
  std::vector<double> conditional_mean_path;
  std::vector<double> conditional_path_se;

  // Unconditional mean of X/K and its standard error.
  std::vector<double> mean_path;
  std::vector<double> mean_path_se;
};

/// Worker count: EXTINCTIA_THREADS if set and positive, else hardware concurrency.
unsigned default_thread_count();

/// One generation: the sum of x iid offspring counts, drawn as a
/// multinomial over the support by a binomial chain (O(L) per call).
std::uint64_t simulate_gw_step(const OffspringDistribution& dist, std::uint64_t x, CounterRng& rng);

/// Replica r uses CounterRng(seed, r); results are reduced in replica order
/// so the output is bit-identical for any thread count (0 = default).
McExtinctionResult gw_extinction_mc(const GwSimConfig& cfg, unsigned threads = 0);

struct FellerPathSample {
  std::vector<double> x;  // X at the n_steps + 1 grid times
  double tau;             // first grid time with X = 0, +inf if none
};

/// Exact Feller transition over a step h: N ~ Poisson(x e^{alpha h} / b),
/// X' ~ Gamma(N, b), b = sigma^2 (e^{alpha h} - 1) / (2 alpha).
double feller_exact_step(const FellerModel& model, double x, double h, CounterRng& rng);
/// Full-truncation Euler step; returns 0 on a nonpositive proposal.
double feller_euler_step(const FellerModel& model, double x, double h, CounterRng& rng);

FellerPathSample simulate_feller_path(const FellerSimConfig& cfg, CounterRng& rng);
FellerPathSample simulate_feller_path(const FellerSimConfig& cfg, double x0, CounterRng& rng);

/// Conditioning set is {tau <= T}.
McExtinctionResult feller_extinction_mc(const FellerSimConfig& cfg, unsigned threads = 0);

/// 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

}  // namespace extinctia
