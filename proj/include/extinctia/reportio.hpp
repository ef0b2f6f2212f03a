#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extinctia/feller_path.hpp"
#include "extinctia/mc_sim.hpp"
#include "extinctia/offspring.hpp"

namespace extinctia {

/// Malformed JSON input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a constraint; `field()` is the dotted path.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ModelKind { galton_watson, feller };

// Model-spec JSON (defaults in brackets):
//   kind           "galton_watson" | "feller"
//   offspring      {"probs": [p0, p1, ...]}     galton_watson only
//   alpha, sigma2, T                            feller only
//   K              initial population (integer for galton_watson)
//   N              horizon in generations       galton_watson only
//   grid_points    DP grid size             [4096]
//   grid_max       DP state bound           [3]
//   n_steps        continuous-path grid     [1024]
//   sim_steps      Feller simulation grid   [64]
//   reps           Monte Carlo replicas     [0 = no simulation]
//   seed                                     [20240601]
//   scheme         "exact" | "euler"        [exact]
//   lambda0, ode_steps  Riccati oracle      [1e9, 10000]
//   conditioning   "at_horizon" | "by_horizon"  [at_horizon]
struct ModelSpec {
  ModelKind kind = ModelKind::galton_watson;
  std::optional<std::vector<double>> offspring;
  std::optional<double> alpha, sigma2, T;
  double K = 1.0;
  std::optional<std::uint64_t> N;
  std::uint64_t grid_points = 4096;
  double grid_max = 3.0;
  std::uint64_t n_steps = 1024;
  std::uint64_t sim_steps = 64;
  std::uint64_t reps = 0;
  std::uint64_t seed = 20240601;
  FellerScheme scheme = FellerScheme::exact_poisson_gamma;
  double lambda0 = 1e9;
  std::uint64_t ode_steps = 10000;
  Conditioning conditioning = Conditioning::at_horizon;

  /// Re-checks every constraint (used after command-line overrides).
  void validate() const;

  OffspringDistribution distribution() const;
  FellerModel feller_model() const;
  nlohmann::json to_json() const;
};

ModelSpec parse_model_spec(std::string_view text);

enum class Provenance { closed_form, paper_printed, dp_oracle, variational_oracle, riccati_oracle, monte_carlo };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// One decay rate -(1/K) log P(tau <= horizon) with its origin.
struct ExponentEntry {
  std::string name;
  Provenance provenance = Provenance::closed_form;
  double rate = 0.0;
  std::optional<double> std_error;  // required for monte_carlo
};

struct McSummary {
  McExtinctionResult result;
  std::string conditioning;
  std::string scheme;  // feller only
};

struct RateReport {
  std::string command;
  ModelKind kind = ModelKind::galton_watson;
  nlohmann::json model;

  // Most likely path sampled on generations (discrete) or grid times.
  std::vector<double> path_index;
  std::vector<double> u_star;
  std::vector<double> u_oracle;  // DP or variational minimizer; may be empty
  double rate_value = 0.0;
  // log P(tau <= horizon) / K in the large-K limit.
  double extinction_exponent = 0.0;
  std::vector<ExponentEntry> exponents;
  std::map<std::string, bool> discrepancy_flags;
  std::optional<McSummary> monte_carlo;
  // Wall-clock timings in milliseconds; excluded from serialization unless requested.
  std::map<std::string, double> timings_ms;
};

nlohmann::json report_to_json(const RateReport& report, bool include_timings = false);
RateReport report_from_json(const nlohmann::json& j);

/// Throws ValidationError if an exponent lacks a provenance label or a
/// Monte Carlo entry lacks its standard error.
void validate_report_json(const nlohmann::json& j);

/// Sorted keys, floats rounded to 12 significant digits.
std::string canonical_json(const nlohmann::json& j);

enum class CsvKind { path, exponents, mc };

/// RFC-4180 CSV with a header row; numbers at 17 significant digits.
std::string emit_csv(const RateReport& report, CsvKind which);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::string_view text);

/// %.17g, or "inf"/"-inf"/"nan".
std::string format_double(double x);

}  // namespace extinctia
