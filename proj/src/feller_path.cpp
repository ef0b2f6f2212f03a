#include "extinctia/feller_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "extinctia/errors.hpp"

namespace extinctia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlphaZero = 1e-10;

bool alpha_is_zero(double alpha) { return std::abs(alpha) < kAlphaZero; }

// x / (1 - e^{-x}), continuous through x = 0.
double tilt_ratio(double x) {
  if (std::abs(x) < kAlphaZero) return 1.0 + x / 2.0 + x * x / 12.0;
  return x / -std::expm1(-x);
}

void check_time(const FellerModel& model, double t) {
  if (!(t >= 0.0 && t <= model.T)) throw DomainError("time must lie in [0, T]");
}

// (e^{-alpha t} - e^{-alpha T}) / (1 - e^{-alpha T}) for alpha != 0.
double decay_bracket(double alpha, double t, double T) {
  return std::exp(-alpha * t) * std::expm1(alpha * (t - T)) / std::expm1(-alpha * T);
}

// Discretized v-form functional shared by the quadrature and the oracle.
double discrete_functional(const FellerModel& model, const std::vector<double>& v, double h) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const double r = 2.0 * (v[k + 1] - v[k]) / h - model.alpha * 0.5 * (v[k] + v[k + 1]);
    sum += r * r;
  }
  return sum * h / (2.0 * model.sigma2);
}

}  // namespace

void FellerModel::validate() const {
  if (!std::isfinite(alpha)) throw DomainError("alpha must be finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be finite and > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("T must be finite and > 0");
  if (!(K > 0.0) || !std::isfinite(K)) throw DomainError("K must be finite and > 0");
}

ContinuousPathGrid ContinuousPathGrid::from_u(double T, std::vector<double> u) {
  if (u.size() < 3) throw ConfigError("continuous path needs n_steps >= 2");
  ContinuousPathGrid g;
  g.T = T;
  g.v.resize(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] >= 0.0)) throw DomainError("continuous path samples must be >= 0");
    g.v[k] = std::sqrt(u[k]);
  }
  g.u = std::move(u);
  return g;
}

ContinuousPathGrid ContinuousPathGrid::from_v(double T, std::vector<double> v) {
  if (v.size() < 3) throw ConfigError("continuous path needs n_steps >= 2");
  ContinuousPathGrid g;
  g.T = T;
  g.u.resize(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] >= 0.0)) throw DomainError("sqrt-path samples must be >= 0");
    g.u[k] = v[k] * v[k];
  }
  g.v = std::move(v);
  return g;
}

double closed_form_exponent(const FellerModel& model) {
  model.validate();
  return 2.0 * tilt_ratio(model.alpha * model.T) / (model.sigma2 * model.T);
}

double printed_theorem_exponent(const FellerModel& model) {
  model.validate();
  return tilt_ratio(model.alpha * model.T) / (model.sigma2 * model.T);
}

double printed_corollary_alpha0_exponent(const FellerModel& model) {
  model.validate();
  return 1.0 / (2.0 * model.sigma2 * model.T);
}

double optimal_v_cont(const FellerModel& model, double t) {
  check_time(model, t);
  if (alpha_is_zero(model.alpha)) return 1.0 - t / model.T;
  return std::exp(model.alpha * t / 2.0) * decay_bracket(model.alpha, t, model.T);
}

double most_likely_path_cont(const FellerModel& model, double t) {
  const double v = optimal_v_cont(model, t);
  return v * v;
}

double printed_path_cont(const FellerModel& model, double t) {
  check_time(model, t);
  if (alpha_is_zero(model.alpha)) {
    const double v = 1.0 - t / model.T;
    return v * v;
  }
  const double b = decay_bracket(model.alpha, t, model.T);
  return std::exp(-model.alpha * t) * b * b;
}

double optimal_control_cont(const FellerModel& model, double t) {
  check_time(model, t);
  const double c_star = -2.0 * tilt_ratio(model.alpha * model.T) / model.T;
  return c_star * std::exp(-model.alpha * t / 2.0);
}

ContinuousPathGrid sample_most_likely_path(const FellerModel& model, std::size_t n_steps) {
  model.validate();
  if (n_steps < 2) throw ConfigError("n_steps must be >= 2");
  std::vector<double> v(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k)
    v[k] = optimal_v_cont(model, model.T * static_cast<double>(k) / static_cast<double>(n_steps));
  v.back() = 0.0;
  return ContinuousPathGrid::from_v(model.T, std::move(v));
}

double rate_quadrature(const FellerModel& model, const ContinuousPathGrid& path) {
  model.validate();
  if (path.u.size() < 3 || path.v.size() != path.u.size()) throw ConfigError("rate_quadrature: malformed path grid");
  if (std::abs(path.T - model.T) > 1e-12 * model.T) throw DomainError("rate_quadrature: path horizon differs from T");
  if (std::abs(path.u[0] - 1.0) > 1e-12) return kInf;
  bool absorbed = false;
  for (std::size_t k = 0; k < path.u.size(); ++k) {
    if (!(path.u[k] >= 0.0) || !std::isfinite(path.u[k])) return kInf;
    if (absorbed && path.u[k] > 0.0) return kInf;
    absorbed = absorbed || path.u[k] == 0.0;
  }
  return discrete_functional(model, path.v, path.step());
}

VariationalResult variational_oracle(const FellerModel& model, std::size_t n_steps) {
  model.validate();
  if (n_steps < 8) throw ConfigError("variational_oracle: n_steps must be >= 8");
  const double h = model.T / static_cast<double>(n_steps);
  if (!(h * std::abs(model.alpha) < 2.0)) throw SolverError("variational_oracle: step too coarse for alpha (need h |alpha| < 2)");

  // Residual r_k = a v_{k+1} - b v_k; stationarity in v_j gives
  // -ab v_{j-1} + (a^2 + b^2) v_j - ab v_{j+1} = 0.
  const double a = 2.0 / h - model.alpha / 2.0;
  const double b = 2.0 / h + model.alpha / 2.0;
  const double diag = a * a + b * b;
  const double off = -a * b;

  const std::size_t m = n_steps - 1;
  std::vector<double> c(m), d(m);
  double pivot = diag;
  c[0] = off / pivot;
  d[0] = (a * b * 1.0) / pivot;
  for (std::size_t j = 1; j < m; ++j) {
    pivot = diag - off * c[j - 1];
    if (std::abs(pivot) <= 1e-14 * diag) throw SolverError("variational_oracle: singular tridiagonal system");
    c[j] = off / pivot;
    d[j] = (0.0 - off * d[j - 1]) / pivot;
  }
  std::vector<double> v(n_steps + 1, 0.0);
  v[0] = 1.0;
  v[m] = d[m - 1];
  for (std::size_t j = m - 1; j >= 1; --j) v[j] = d[j - 1] - c[j - 1] * v[j + 1];
  for (double& x : v) x = std::max(x, 0.0);

  VariationalResult out{ContinuousPathGrid::from_v(model.T, std::move(v)), 0.0};
  out.value = discrete_functional(model, out.path.v, h);
  return out;
}

double riccati_exponent_oracle(const FellerModel& model, double lambda0, std::size_t n_ode_steps) {
  model.validate();
  if (!(lambda0 >= 1e6) || !std::isfinite(lambda0)) throw DomainError("riccati oracle: lambda0 must be >= 1e6");
  if (n_ode_steps < 1000) throw DomainError("riccati oracle: n_ode_steps must be >= 1000");
  const double dt = model.T / static_cast<double>(n_ode_steps);
  const auto rhs = [&](double w) { return -model.alpha * w + model.sigma2 / 2.0; };
  double w = 1.0 / lambda0;
  for (std::size_t i = 0; i < n_ode_steps; ++i) {
    const double k1 = rhs(w);
    const double k2 = rhs(w + 0.5 * dt * k1);
    const double k3 = rhs(w + 0.5 * dt * k2);
    const double k4 = rhs(w + dt * k3);
    w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return 1.0 / w;
}

ExponentReport extinction_exponent_report(const FellerModel& model, std::size_t n_steps, double lambda0,
                                          std::size_t n_ode_steps) {
  model.validate();
  ExponentReport r{};
  r.variational_value = variational_oracle(model, n_steps).value;
  r.riccati_value = riccati_exponent_oracle(model, lambda0, n_ode_steps);
  r.closed_form_value = closed_form_exponent(model);
  r.paper_printed_value = printed_theorem_exponent(model);
  r.corollary_printed_value =
      alpha_is_zero(model.alpha) ? printed_corollary_alpha0_exponent(model) : r.paper_printed_value;
  const auto differs = [&](double printed) {
    return std::abs(printed - r.closed_form_value) > 1e-6 * std::abs(r.closed_form_value);
  };
  r.discrepancy_flag = differs(r.paper_printed_value);
  r.corollary_discrepancy_flag = differs(r.corollary_printed_value);
  double gap = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = model.T * i / 100.0;
    gap = std::max(gap, std::abs(printed_path_cont(model, t) - most_likely_path_cont(model, t)));
  }
  r.path_prefactor_flag = gap > 1e-12;
  r.extinction_probability = std::exp(-model.K * r.closed_form_value);
  return r;
}

}  // namespace extinctia
