#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "extinctia/reportio.hpp"

namespace extinctia::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kDisagreement = 2 };

/// Full report for a galton_watson spec: closed-form path and exponent,
/// Bellman grid oracle, and Monte Carlo when spec.reps > 0.
RateReport analyze_gw(const ModelSpec& spec);
/// Full report for a feller spec: closed-form path, rate quadrature,
/// variational and Riccati oracles, printed constants with discrepancy
/// flags, and Monte Carlo when spec.reps > 0.
RateReport analyze_feller(const ModelSpec& spec);

/// Binary-splitting most likely paths for p in {0.2, 0.5, 0.8}, N = 8.
std::string figure_csv();

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace extinctia::cli
