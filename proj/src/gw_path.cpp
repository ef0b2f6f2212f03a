#include "extinctia/gw_path.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "extinctia/errors.hpp"

namespace extinctia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRootTol = 1e-12;
constexpr int kMaxBisection = 200;
constexpr int kMaxBracketDoublings = 64;

double solve_tilt(const OffspringDistribution& dist, double ratio) {
  double lo = -1.0, hi = 1.0;
  for (int i = 0; dist.log_mgf_d1(lo) >= ratio; ++i) {
    if (i == kMaxBracketDoublings) throw SolverError("legendre: failed to bracket tilt from below");
    lo *= 2.0;
  }
  for (int i = 0; dist.log_mgf_d1(hi) <= ratio; ++i) {
    if (i == kMaxBracketDoublings) throw SolverError("legendre: failed to bracket tilt from above");
    hi *= 2.0;
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < kMaxBisection; ++i) {
    mid = 0.5 * (lo + hi);
    const double gap = dist.log_mgf_d1(mid) - ratio;
    if (std::abs(gap) <= kRootTol || mid == lo || mid == hi) break;
    (gap < 0.0 ? lo : hi) = mid;
  }
  return mid;
}

}  // namespace

LegendreResult legendre(const OffspringDistribution& dist, double y, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("legendre: x must be finite and > 0");
  if (!(y >= 0.0) || !std::isfinite(y)) throw DomainError("legendre: y must be finite and >= 0");
  if (y == 0.0 && dist.p0() == 0.0) throw DomainError("legendre: y = 0 is unreachable when p_0 = 0");

  const double ratio = y / x;
  const auto lo = static_cast<double>(dist.min_offspring());
  const auto hi = static_cast<double>(dist.max_offspring());
  if (ratio < lo) return {kInf, -kInf};
  if (ratio > hi) return {kInf, kInf};
  if (lo == hi) return {0.0, 0.0};
  if (ratio == lo) return {-x * std::log(dist.prob(dist.min_offspring())), -kInf};
  if (ratio == hi) return {-x * std::log(dist.prob(dist.max_offspring())), kInf};

  const double t = solve_tilt(dist, ratio);
  const double rate = t * y - x * dist.log_mgf(t);
  return {rate > 0.0 ? rate : 0.0, t};
}

double path_rate(const OffspringDistribution& dist, const DiscretePath& path) {
  const auto& u = path.u;
  if (u.empty() || std::abs(u[0] - 1.0) > 1e-12) return kInf;
  for (double v : u)
    if (!(v >= 0.0) || !std::isfinite(v)) return kInf;

  double total = 0.0;
  for (std::size_t n = 1; n < u.size(); ++n) {
    const double prev = u[n - 1], cur = u[n];
    if (prev == 0.0) {
      if (cur > 0.0) return kInf;
      continue;
    }
    if (cur == 0.0 && dist.p0() == 0.0) return kInf;
    total += legendre(dist, cur, prev).rate;
    if (total == kInf) return kInf;
  }
  return total;
}

DiscretePath most_likely_extinction_path(const OffspringDistribution& dist, std::size_t horizon) {
  if (dist.p0() == 0.0) throw DomainError("extinction path needs p_0 > 0");
  const PgfIterates it = pgf_iterates(dist, horizon);
  DiscretePath path;
  path.u.resize(horizon + 1);
  path.u[0] = 1.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    // g'(log q) = q f'(q) / f(q); q_0 = 0 gives the terminal factor g'(-inf) = 0.
    const double q = it.q[horizon - n];
    const double factor = q == 0.0 ? 0.0 : q * dist.pgf_d1(q) / dist.pgf(q);
    path.u[n] = path.u[n - 1] * factor;
  }
  return path;
}

double extinction_exponent_discrete(const OffspringDistribution& dist, std::size_t horizon) {
  if (dist.p0() == 0.0) throw DomainError("extinction exponent needs p_0 > 0");
  return std::log(pgf_iterates(dist, horizon).q.back());
}

namespace {

class BellmanStage {
 public:
  BellmanStage(const OffspringDistribution& dist, double step, const std::vector<double>& next)
      : dist_(dist), step_(step), next_(next) {}

  double cost(std::size_t to, double x) const {
    const double tail = next_[to];
    if (tail == kInf) return kInf;
    return tail + legendre(dist_, static_cast<double>(to) * step_, x).rate;
  }

  // Smallest argmin over candidates [jlo, jhi].
  std::pair<std::size_t, double> best(double x, std::size_t jlo, std::size_t jhi) const {
    std::size_t arg = jlo;
    double val = kInf;
    for (std::size_t j = jlo; j <= jhi; ++j) {
      const double c = cost(j, x);
      if (c < val) {
        val = c;
        arg = j;
      }
    }
    return {arg, val};
  }

  void sweep(std::size_t klo, std::size_t khi, std::size_t jlo, std::size_t jhi, std::vector<double>& value,
             std::vector<std::uint32_t>& arg) const {
    if (klo > khi) return;
    const std::size_t kmid = klo + (khi - klo) / 2;
    const auto [j, v] = best(static_cast<double>(kmid) * step_, jlo, jhi);
    value[kmid] = v;
    arg[kmid] = static_cast<std::uint32_t>(j);
    if (kmid > klo) sweep(klo, kmid - 1, jlo, j, value, arg);
    sweep(kmid + 1, khi, j, jhi, value, arg);
  }

 private:
  const OffspringDistribution& dist_;
  double step_;
  const std::vector<double>& next_;
};

}  // namespace

DpOracleResult dp_oracle(const OffspringDistribution& dist, const DpOracleConfig& cfg) {
  if (!(cfg.grid_max > 1.0) || !std::isfinite(cfg.grid_max)) throw ConfigError("dp_oracle: grid_max must be > 1");
  if (cfg.grid_points < 64) throw ConfigError("dp_oracle: grid_points must be >= 64");
  if (cfg.grid_points > std::numeric_limits<std::uint32_t>::max() - 1)
    throw ConfigError("dp_oracle: grid_points too large");
  if (cfg.horizon < 1) throw ConfigError("dp_oracle: horizon must be >= 1");
  if (dist.p0() == 0.0) throw DomainError("dp_oracle: extinction impossible when p_0 = 0");

  const std::size_t points = cfg.grid_points;
  const std::size_t horizon = cfg.horizon;
  const double step = cfg.grid_max / static_cast<double>(points);
  const double log_p0 = std::log(dist.p0());

  DpOracleResult out;
  out.grid_step = step;
  if (horizon == 1) {
    out.path.u = {1.0, 0.0};
    out.value = -log_p0;
    return out;
  }

  // B_N(x) = -x log p_0 on the grid.
  std::vector<double> next(points + 1);
  for (std::size_t k = 0; k <= points; ++k) next[k] = -static_cast<double>(k) * step * log_p0;

  // policy[n] maps the grid index of u_{n-1} to that of u_n, n = 2..N-1.
  std::vector<std::vector<std::uint32_t>> policy(horizon);
  for (std::size_t n = horizon - 1; n >= 2; --n) {
    std::vector<double> cur(points + 1);
    std::vector<std::uint32_t> arg(points + 1, 0);
    cur[0] = 0.0;  // absorbed
    const BellmanStage stage(dist, step, next);
    if (cfg.exhaustive) {
      for (std::size_t k = 1; k <= points; ++k) {
        const auto [j, v] = stage.best(static_cast<double>(k) * step, 0, points);
        cur[k] = v;
        arg[k] = static_cast<std::uint32_t>(j);
      }
    } else {
      stage.sweep(1, points, 0, points, cur, arg);
    }
    policy[n] = std::move(arg);
    next = std::move(cur);
  }

  const BellmanStage first(dist, step, next);
  const auto [j1, value] = first.best(1.0, 0, points);
  out.value = value;
  out.path.u.assign(horizon + 1, 0.0);
  out.path.u[0] = 1.0;
  std::size_t j = j1;
  for (std::size_t n = 1; n < horizon; ++n) {
    if (n >= 2) j = policy[n][j];
    out.path.u[n] = static_cast<double>(j) * step;
  }
  return out;
}

}  // namespace extinctia
