#pragma once

#include <cstddef>
#include <vector>

#include "extinctia/offspring.hpp"

namespace extinctia {

/// Normalized population path (u_0, ..., u_N), u_n = X_n / K.
///
/// Any sequence is representable; paths that do not start at 1, contain a
/// negative entry, or leave zero after reaching it have infinite rate.
struct DiscretePath {
  std::vector<double> u;

  std::size_t horizon() const { return u.empty() ? 0 : u.size() - 1; }
};

struct LegendreResult {
  double rate;    // I(y, x), possibly +inf
  double t_star;  // maximizing tilt, +-inf when attained only in the limit
};

/// I(y, x) = sup_t [t y - x g(t)].
///
/// Interior ratios y/x are resolved by bisection on g'; the endpoints of the
/// support use the exact limits -x log p_lo and -x log p_L. Throws
/// DomainError for x <= 0, y < 0, or y = 0 with p_0 = 0.
LegendreResult legendre(const OffspringDistribution& dist, double y, double x);

/// Discrete rate function J_N(u).
double path_rate(const OffspringDistribution& dist, const DiscretePath& path);

/// u*_n = prod_{i <= n} g'(g_{N-i}(-inf)), evaluated through the pgf
/// iterates as q f'(q) / f(q). Terminal entry is exactly 0.
DiscretePath most_likely_extinction_path(const OffspringDistribution& dist, std::size_t horizon);

/// lim (1/K) log P(tau <= N) = log f_N(0).
double extinction_exponent_discrete(const OffspringDistribution& dist, std::size_t horizon);

struct DpOracleConfig {
  double grid_max = 3.0;
  std::size_t grid_points = 4096;  // positive states; 0 is always added
  std::size_t horizon = 1;
  // Scan every candidate instead of the monotone divide-and-conquer sweep.
  bool exhaustive = false;
};

struct DpOracleResult {
  DiscretePath path;
  double value;      // B_1(1)
  double grid_step;  // grid_max / grid_points
};

/// Backward Bellman recursion B_n(x) = min_u [B_{n+1}(u) + I(u, x)] on the
/// state grid {0} u {k h : k = 1..grid_points}, boundary B_N(x) = -x log p_0.
///
/// Pure grid argmin, no interpolation. By default each stage is minimized
/// with a divide-and-conquer sweep that relies on the argmin being
/// nondecreasing in x (I(u, x) = x I(u/x, 1) has decreasing differences);
/// `exhaustive` scans all pairs instead.
DpOracleResult dp_oracle(const OffspringDistribution& dist, const DpOracleConfig& cfg);

}  // namespace extinctia
