#include "extinctia/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "extinctia/errors.hpp"

namespace extinctia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNormTol = 1e-12;

// Mass beyond the truncation point goes to the last kept atom.
std::vector<double> fold_tail(std::vector<double> probs, double tail_mass) {
  probs.back() += std::max(0.0, tail_mass);
  return probs;
}

}  // namespace

OffspringDistribution::OffspringDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DomainError("offspring distribution needs at least one probability");
  double total = 0.0;
  for (std::size_t l = 0; l < probs_.size(); ++l) {
    const double p = probs_[l];
    if (!std::isfinite(p) || p < 0.0)
      throw DomainError("offspring probability p_" + std::to_string(l) + " must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTol)
    throw DomainError("offspring probabilities sum to " + std::to_string(total) + ", expected 1");
  while (probs_.size() > 1 && probs_.back() == 0.0) probs_.pop_back();
  if (probs_.size() == 1 && probs_[0] != 1.0)
    throw DomainError("offspring distribution with L = 0 must be the point mass at zero");
  min_support_ = static_cast<std::size_t>(
      std::find_if(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; }) - probs_.begin());
}

OffspringDistribution OffspringDistribution::binary_splitting(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary splitting probability must lie in [0,1]");
  return OffspringDistribution({1.0 - p, 0.0, p});
}

OffspringDistribution OffspringDistribution::truncated_poisson(double lambda, double tail) {
  if (!(lambda > 0.0 && lambda <= 500.0)) throw DomainError("Poisson offspring mean must lie in (0, 500]");
  if (!(tail > 0.0 && tail <= 1e-12)) throw DomainError("truncation tail must lie in (0, 1e-12]");
  std::vector<double> probs;
  double cumulative = 0.0;
  for (std::size_t l = 0;; ++l) {
    const double logp = -lambda + static_cast<double>(l) * std::log(lambda) - std::lgamma(static_cast<double>(l) + 1.0);
    probs.push_back(std::exp(logp));
    cumulative += probs.back();
    if (static_cast<double>(l) > lambda && 1.0 - cumulative <= tail) break;
  }
  return OffspringDistribution(fold_tail(std::move(probs), 1.0 - cumulative));
}

OffspringDistribution OffspringDistribution::truncated_geometric(double r, double tail) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("geometric ratio must lie in [0,1)");
  if (!(tail > 0.0 && tail <= 1e-12)) throw DomainError("truncation tail must lie in (0, 1e-12]");
  std::vector<double> probs;
  double cumulative = 0.0;
  double term = 1.0 - r;
  for (;;) {
    probs.push_back(term);
    cumulative += term;
    if (1.0 - cumulative <= tail || probs.size() > 100000) break;
    term *= r;
  }
  return OffspringDistribution(fold_tail(std::move(probs), 1.0 - cumulative));
}

double OffspringDistribution::pgf(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument must lie in [0,1]");
  double acc = 0.0;
  for (auto it = probs_.rbegin(); it != probs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double OffspringDistribution::pgf_d1(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument must lie in [0,1]");
  double acc = 0.0;
  for (std::size_t l = probs_.size() - 1; l >= 1; --l) acc = acc * s + static_cast<double>(l) * probs_[l];
  return acc;
}

double OffspringDistribution::mean() const {
  double m = 0.0;
  for (std::size_t l = 1; l < probs_.size(); ++l) m += static_cast<double>(l) * probs_[l];
  return m;
}

double OffspringDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t l = 0; l < probs_.size(); ++l) {
    const double d = static_cast<double>(l) - m;
    v += d * d * probs_[l];
  }
  return v;
}

OffspringDistribution::Moments OffspringDistribution::tilted_moments(double t) const {
  if (std::isnan(t)) throw DomainError("log-MGF argument is NaN");
  if (t == -kInf) {
    const double lo = probs_[min_support_];
    return {min_support_ == 0 ? std::log(lo) : -kInf, static_cast<double>(min_support_), 0.0};
  }
  const std::size_t top = max_offspring();
  if (t == kInf) return {top == 0 ? 0.0 : kInf, static_cast<double>(top), 0.0};

  double shift = -kInf;
  for (std::size_t l = min_support_; l < probs_.size(); ++l)
    if (probs_[l] > 0.0) shift = std::max(shift, t * static_cast<double>(l) + std::log(probs_[l]));

  double sum = 0.0, s1 = 0.0;
  for (std::size_t l = min_support_; l < probs_.size(); ++l) {
    if (probs_[l] == 0.0) continue;
    const double w = std::exp(t * static_cast<double>(l) + std::log(probs_[l]) - shift);
    sum += w;
    s1 += w * static_cast<double>(l);
  }
  const double m1 = s1 / sum;
  double m2 = 0.0;
  for (std::size_t l = min_support_; l < probs_.size(); ++l) {
    if (probs_[l] == 0.0) continue;
    const double w = std::exp(t * static_cast<double>(l) + std::log(probs_[l]) - shift);
    const double d = static_cast<double>(l) - m1;
    m2 += w * d * d;
  }
  return {shift + std::log(sum), m1, m2 / sum};
}

double OffspringDistribution::log_mgf(double t) const {
  if (t == -kInf && p0() == 0.0) throw DomainError("g(-inf) = log p_0 is undefined when p_0 = 0");
  return tilted_moments(t).log_sum;
}

double OffspringDistribution::log_mgf_d1(double t) const { return tilted_moments(t).m1; }

double OffspringDistribution::log_mgf_d2(double t) const { return tilted_moments(t).m2; }

PgfIterates pgf_iterates(const OffspringDistribution& dist, std::size_t horizon) {
  if (horizon < 1) throw DomainError("pgf_iterates needs N >= 1");
  PgfIterates it;
  it.q.resize(horizon + 1);
  it.q[0] = 0.0;
  for (std::size_t n = 1; n <= horizon; ++n) it.q[n] = std::min(1.0, dist.pgf(it.q[n - 1]));
  return it;
}

double extinction_prob_exact(const OffspringDistribution& dist, unsigned long long ancestors,
                             std::size_t horizon) {
  if (ancestors < 1) throw DomainError("extinction probability needs K >= 1");
  const double q = pgf_iterates(dist, horizon).q.back();
  if (q == 0.0) return 0.0;
  return std::exp(static_cast<double>(ancestors) * std::log(q));
}

}  // namespace extinctia
