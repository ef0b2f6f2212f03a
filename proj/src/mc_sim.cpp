#include "extinctia/mc_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "extinctia/errors.hpp"

namespace extinctia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kBlockSize = 4096;

struct Accumulator {
  std::uint64_t reps = 0, extinct = 0, conditioned = 0;
  std::vector<double> sum, sumsq, csum, csumsq;

  explicit Accumulator(std::size_t len) : sum(len), sumsq(len), csum(len), csumsq(len) {}

  void add(const std::vector<double>& path, bool is_extinct, bool is_conditioned) {
    ++reps;
    extinct += is_extinct;
    for (std::size_t i = 0; i < path.size(); ++i) {
      sum[i] += path[i];
      sumsq[i] += path[i] * path[i];
    }
    if (!is_conditioned) return;
    ++conditioned;
    for (std::size_t i = 0; i < path.size(); ++i) {
      csum[i] += path[i];
      csumsq[i] += path[i] * path[i];
    }
  }

  void merge(const Accumulator& o) {
    reps += o.reps;
    extinct += o.extinct;
    conditioned += o.conditioned;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += o.sum[i];
      sumsq[i] += o.sumsq[i];
      csum[i] += o.csum[i];
      csumsq[i] += o.csumsq[i];
    }
  }
};

void mean_and_se(const std::vector<double>& sum, const std::vector<double>& sumsq, std::uint64_t n,
                 std::vector<double>& mean, std::vector<double>& se) {
  mean.resize(sum.size());
  se.resize(sum.size());
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    mean[i] = sum[i] / nd;
    const double var = n > 1 ? std::max(0.0, (sumsq[i] - nd * mean[i] * mean[i]) / (nd - 1.0)) : 0.0;
    se[i] = std::sqrt(var / nd);
  }
}

// Runs `replica(rng, path) -> {extinct, conditioned}` for every replica index
// in fixed-size blocks; blocks are merged in index order.
template <class Replica>
McExtinctionResult run_replicas(std::uint64_t reps, std::uint64_t seed, std::size_t path_len, unsigned threads,
                                Replica replica) {
  const std::uint64_t n_blocks = (reps + kBlockSize - 1) / kBlockSize;
  std::vector<Accumulator> blocks(n_blocks, Accumulator(path_len));
  std::atomic<std::uint64_t> next{0};

  auto worker = [&] {
    std::vector<double> path(path_len);
    for (std::uint64_t b = next++; b < n_blocks; b = next++) {
      Accumulator& acc = blocks[b];
      const std::uint64_t end = std::min(reps, (b + 1) * kBlockSize);
      for (std::uint64_t r = b * kBlockSize; r < end; ++r) {
        CounterRng rng(seed, r);
        const auto [is_extinct, is_conditioned] = replica(rng, path);
        acc.add(path, is_extinct, is_conditioned);
      }
    }
  };

  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(n_blocks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  Accumulator total(path_len);
  for (const auto& b : blocks) total.merge(b);

  McExtinctionResult out;
  out.reps = total.reps;
  out.n_extinct = total.extinct;
  const auto n = static_cast<double>(total.reps);
  out.frequency = static_cast<double>(total.extinct) / n;
  out.std_error = std::sqrt(out.frequency * (1.0 - out.frequency) / n);
  std::tie(out.wilson_low, out.wilson_high) = wilson_interval(total.extinct, total.reps);
  mean_and_se(total.sum, total.sumsq, total.reps, out.mean_path, out.mean_path_se);
  out.n_conditioned = total.conditioned;
  if (total.conditioned > 0)
    mean_and_se(total.csum, total.csumsq, total.conditioned, out.conditional_mean_path, out.conditional_path_se);
  return out;
}

}  // namespace

unsigned default_thread_count() {
  if (const char* env = std::getenv("EXTINCTIA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const auto nd = static_cast<double>(n);
  const double p = static_cast<double>(k) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double center = (p + z2 / (2.0 * nd)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

void GwSimConfig::validate() const {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (N < 1) throw ConfigError("N must be >= 1");
  if (reps < 1) throw ConfigError("reps must be >= 1");
}

void FellerSimConfig::validate() const {
  model.validate();
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (reps < 1) throw ConfigError("reps must be >= 1");
}

std::vector<std::string> FellerSimConfig::warnings() const {
  std::vector<std::string> w;
  const double recommended = model.T * std::max(1.0, std::abs(model.alpha)) * 100.0;
  if (scheme == FellerScheme::euler_full_truncation && static_cast<double>(n_steps) < recommended)
    w.push_back("euler scheme with n_steps < T max(1,|alpha|) 100: absorption bias may be large");
  if (std::exp(-model.K * closed_form_exponent(model)) < 10.0 / static_cast<double>(reps))
    w.push_back("expected number of extinct replicas below 10: estimate unreliable");
  return w;
}

std::uint64_t simulate_gw_step(const OffspringDistribution& dist, std::uint64_t x, CounterRng& rng) {
  if (x == 0) return 0;
  const auto probs = dist.probs();
  const std::size_t top = probs.size() - 1;
  std::uint64_t remaining = x;
  double mass_left = 1.0;
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < top && remaining > 0; ++l) {
    if (probs[l] == 0.0) continue;
    const double p = mass_left > 0.0 ? std::clamp(probs[l] / mass_left, 0.0, 1.0) : 1.0;
    const std::uint64_t count = std::binomial_distribution<std::uint64_t>(remaining, p)(rng);
    total += l * count;
    remaining -= count;
    mass_left -= probs[l];
  }
  return total + top * remaining;
}

McExtinctionResult gw_extinction_mc(const GwSimConfig& cfg, unsigned threads) {
  cfg.validate();
  const double k = static_cast<double>(cfg.K);
  return run_replicas(cfg.reps, cfg.seed, cfg.N + 1, threads, [&](CounterRng& rng, std::vector<double>& path) {
    std::uint64_t x = cfg.K;
    std::size_t tau = cfg.N + 1;
    path[0] = 1.0;
    for (std::size_t n = 1; n <= cfg.N; ++n) {
      x = simulate_gw_step(cfg.dist, x, rng);
      path[n] = static_cast<double>(x) / k;
      if (x == 0 && tau > cfg.N) tau = n;
    }
    const bool extinct = tau <= cfg.N;
    const bool conditioned = cfg.conditioning == Conditioning::at_horizon ? tau == cfg.N : extinct;
    return std::pair{extinct, conditioned};
  });
}

double feller_exact_step(const FellerModel& model, double x, double h, CounterRng& rng) {
  if (!(x > 0.0)) return 0.0;
  const double ah = model.alpha * h;
  const double growth = std::abs(ah) < 1e-10 ? 1.0 + ah / 2.0 : std::expm1(ah) / ah;
  const double scale = model.sigma2 * h * growth / 2.0;
  const double poisson_mean = x * std::exp(ah) / scale;
  const auto shape = std::poisson_distribution<std::uint64_t>(poisson_mean)(rng);
  if (shape == 0) return 0.0;
  return std::gamma_distribution<double>(static_cast<double>(shape), scale)(rng);
}

double feller_euler_step(const FellerModel& model, double x, double h, CounterRng& rng) {
  if (!(x > 0.0)) return 0.0;
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  const double next = x + model.alpha * x * h + std::sqrt(model.sigma2 * x * h) * z;
  return next > 0.0 ? next : 0.0;
}

FellerPathSample simulate_feller_path(const FellerSimConfig& cfg, CounterRng& rng) {
  return simulate_feller_path(cfg, cfg.model.K, rng);
}

FellerPathSample simulate_feller_path(const FellerSimConfig& cfg, double x0, CounterRng& rng) {
  const double h = cfg.model.T / static_cast<double>(cfg.n_steps);
  FellerPathSample s{std::vector<double>(cfg.n_steps + 1, 0.0), kInf};
  s.x[0] = std::max(0.0, x0);
  if (s.x[0] == 0.0) s.tau = 0.0;
  for (std::size_t k = 1; k <= cfg.n_steps; ++k) {
    const double prev = s.x[k - 1];
    s.x[k] = cfg.scheme == FellerScheme::exact_poisson_gamma ? feller_exact_step(cfg.model, prev, h, rng)
                                                              : feller_euler_step(cfg.model, prev, h, rng);
    if (s.x[k] == 0.0 && s.tau == kInf) s.tau = cfg.model.T * static_cast<double>(k) / static_cast<double>(cfg.n_steps);
  }
  return s;
}

McExtinctionResult feller_extinction_mc(const FellerSimConfig& cfg, unsigned threads) {
  cfg.validate();
  return run_replicas(cfg.reps, cfg.seed, cfg.n_steps + 1, threads, [&](CounterRng& rng, std::vector<double>& path) {
    const FellerPathSample s = simulate_feller_path(cfg, rng);
    for (std::size_t k = 0; k < path.size(); ++k) path[k] = s.x[k] / cfg.model.K;
    const bool extinct = s.tau <= cfg.model.T;
    return std::pair{extinct, extinct};
  });
}

}  // namespace extinctia
