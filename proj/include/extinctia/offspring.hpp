#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace extinctia {

/// Offspring law {p_0, ..., p_L} of a Galton-Watson process.
///
/// The support is finite, so the log moment generating function exists on
/// the whole real line. Trailing zero probabilities are stripped at
/// construction; the only admissible law with L = 0 is the point mass at 0.
/// The arguments t = -inf and t = +inf are accepted by the log-MGF family as
/// exact sentinels (their values are limits computed in closed form).
class OffspringDistribution {
 public:
  /// Throws DomainError unless all entries are finite, nonnegative and sum
  /// to one within 1e-12.
  explicit OffspringDistribution(std::vector<double> probs);

  /// Binary splitting: p_0 = 1 - p, p_2 = p.
  static OffspringDistribution binary_splitting(double p);
  /// Poisson(lambda) truncated where the tail mass drops below `tail`; the
  /// removed mass is folded into the last retained atom.
  static OffspringDistribution truncated_poisson(double lambda, double tail = 1e-12);
  /// Geometric law p_l = (1 - r) r^l, truncated as above.
  static OffspringDistribution truncated_geometric(double r, double tail = 1e-12);

  std::span<const double> probs() const { return probs_; }
  double prob(std::size_t l) const { return l < probs_.size() ? probs_[l] : 0.0; }
  double p0() const { return probs_.front(); }
  /// Largest support point L.
  std::size_t max_offspring() const { return probs_.size() - 1; }
  /// Smallest support point.
  std::size_t min_offspring() const { return min_support_; }

  /// f(s) = sum p_l s^l, for s in [0, 1].
  double pgf(double s) const;
  /// f'(s).
  double pgf_d1(double s) const;

  double mean() const;
  double variance() const;

  /// g(t) = log sum e^{tl} p_l, overflow-safe.
  double log_mgf(double t) const;
  double log_mgf_d1(double t) const;
  double log_mgf_d2(double t) const;

 private:
  struct Moments {
    double log_sum;  // g(t)
    double m1;       // g'(t)
    double m2;       // g''(t)
  };
  Moments tilted_moments(double t) const;

  std::vector<double> probs_;
  std::size_t min_support_ = 0;
};

/// q_n = f_n(0), n = 0..N, with q_0 = 0.
struct PgfIterates {
  std::vector<double> q;

  std::size_t horizon() const { return q.size() - 1; }
  double at(std::size_t n) const { return q.at(n); }
};

/// Forward iteration q_n = f(q_{n-1}) in the pgf domain.
PgfIterates pgf_iterates(const OffspringDistribution& dist, std::size_t horizon);

/// P(tau <= N) = f_N(0)^K for K ancestors.
double extinction_prob_exact(const OffspringDistribution& dist, unsigned long long ancestors,
                             std::size_t horizon);

}  // namespace extinctia
