#pragma once

#include <cstddef>
#include <vector>

namespace extinctia {

/// dX = alpha X dt + sigma sqrt(X) dB, X_0 = K, observed on [0, T].
struct FellerModel {
  double alpha = 0.0;
  double sigma2 = 1.0;
  double T = 1.0;
  double K = 1.0;

  /// Throws DomainError unless sigma2, T and K are finite and positive.
  void validate() const;
};

/// Uniform-grid samples of a normalized path u_t and of v_t = sqrt(u_t).
struct ContinuousPathGrid {
  double T = 1.0;
  std::vector<double> u;
  std::vector<double> v;

  std::size_t n_steps() const { return u.empty() ? 0 : u.size() - 1; }
  double step() const { return T / static_cast<double>(n_steps()); }
  double time(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(n_steps()); }

  static ContinuousPathGrid from_u(double T, std::vector<double> u);
  static ContinuousPathGrid from_v(double T, std::vector<double> v);
};

/// 2 alpha / (sigma^2 (1 - e^{-alpha T})), with the alpha -> 0 limit 2 / (sigma^2 T).
/// Rate of -(1/K) log P(tau <= T).
double closed_form_exponent(const FellerModel& model);

/// Constant printed in the main theorem: alpha / (sigma^2 (1 - e^{-alpha T})),
/// 1 / (sigma^2 T) at alpha = 0.
double printed_theorem_exponent(const FellerModel& model);

/// Alpha = 0 constant printed in the corollary, 1 / (2 sigma^2 T).
double printed_corollary_alpha0_exponent(const FellerModel& model);

/// v*_t = e^{-alpha t/2} (1 - e^{alpha (t - T)}) / (1 - e^{-alpha T}); 1 - t/T at alpha = 0.
double optimal_v_cont(const FellerModel& model, double t);

/// u*_t = (v*_t)^2, the most likely path to extinction at T.
double most_likely_path_cont(const FellerModel& model, double t);

/// Path as printed in the main theorem (prefactor e^{-alpha t}); kept only
/// to quantify its disagreement with u*.
double printed_path_cont(const FellerModel& model, double t);

/// Optimal control w*_t = c* e^{-alpha t / 2}, c* = -2 alpha / (1 - e^{-alpha T}).
double optimal_control_cont(const FellerModel& model, double t);

ContinuousPathGrid sample_most_likely_path(const FellerModel& model, std::size_t n_steps);

/// J_T(u) in v-form, (1/(2 sigma^2)) int (2 v' - alpha v)^2 dt, by composite
/// midpoint rule with forward-difference v'. +inf if u_0 != 1 or the path
/// leaves zero after reaching it.
double rate_quadrature(const FellerModel& model, const ContinuousPathGrid& path);

struct VariationalResult {
  ContinuousPathGrid path;
  double value;
};

/// Exact minimizer of the discretized quadratic functional over interior
/// v_1..v_{n-1} with v_0 = 1, v_n = 0 (tridiagonal normal equations).
VariationalResult variational_oracle(const FellerModel& model, std::size_t n_steps);

/// Integrates w' = -alpha w + sigma^2 / 2, w(0) = 1/lambda0 by RK4 and returns
/// 1 / w(T), i.e. the Laplace exponent of X_T at lambda0. As lambda0 -> inf
/// this is -(1/K) log P(X_T = 0).
double riccati_exponent_oracle(const FellerModel& model, double lambda0, std::size_t n_ode_steps);

struct ExponentReport {
  double variational_value;
  double riccati_value;
  double closed_form_value;
  double paper_printed_value;
  double corollary_printed_value;  // alpha = 0 special case of the corollary; theorem constant otherwise
  bool discrepancy_flag;           // printed theorem constant differs from closed form
  bool corollary_discrepancy_flag;
  bool path_prefactor_flag;        // printed path differs from u* somewhere on [0, T]
  double extinction_probability;   // exp(-K closed_form_value)
};

ExponentReport extinction_exponent_report(const FellerModel& model, std::size_t n_steps,
                                          double lambda0 = 1e9, std::size_t n_ode_steps = 10000);

}  // namespace extinctia
