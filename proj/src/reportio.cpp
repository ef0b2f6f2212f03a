#include "extinctia/reportio.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "extinctia/errors.hpp"

namespace extinctia {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownFields = {
    "kind",   "offspring", "alpha",  "sigma2",    "T",       "K",         "N",        "grid_points",
    "grid_max", "n_steps", "sim_steps", "reps", "seed", "scheme", "lambda0", "ode_steps", "conditioning"};

double number_field(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(key, "expected a finite number");
  return x;
}

std::uint64_t uint_field(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw ValidationError(key, "expected a nonnegative integer");
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
  }
  throw ValidationError(key, "expected a nonnegative integer");
}

std::string string_field(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ValidationError(key, "expected a string");
  return v.get<std::string>();
}

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double from_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("", "expected a numeric value");
}

json num_array(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

std::vector<double> from_num_array(const json& j) {
  std::vector<double> xs;
  for (const auto& e : j) xs.push_back(from_num(e));
  return xs;
}

std::string_view kind_name(ModelKind k) { return k == ModelKind::feller ? "feller" : "galton_watson"; }
std::string_view scheme_name(FellerScheme s) { return s == FellerScheme::euler_full_truncation ? "euler" : "exact"; }
std::string_view conditioning_name(Conditioning c) { return c == Conditioning::by_horizon ? "by_horizon" : "at_horizon"; }

}  // namespace

void ModelSpec::validate() const {
  if (kind == ModelKind::galton_watson) {
    if (!offspring) throw ValidationError("offspring.probs", "required for galton_watson");
    try {
      (void)OffspringDistribution(*offspring);
    } catch (const DomainError& e) {
      throw ValidationError("offspring.probs", e.what());
    }
    if (!N) throw ValidationError("N", "required for galton_watson");
    if (*N < 1) throw ValidationError("N", "must be >= 1");
    if (!(K >= 1.0) || K != std::floor(K)) throw ValidationError("K", "must be an integer >= 1");
    if (!(grid_max > 1.0)) throw ValidationError("grid_max", "must be > 1");
    if (grid_points < 64) throw ValidationError("grid_points", "must be >= 64");
  } else {
    if (!alpha) throw ValidationError("alpha", "required for feller");
    if (!sigma2) throw ValidationError("sigma2", "required for feller");
    if (!(*sigma2 > 0.0)) throw ValidationError("sigma2", "must be > 0");
    if (!T) throw ValidationError("T", "required for feller");
    if (!(*T > 0.0)) throw ValidationError("T", "must be > 0");
    if (!(K > 0.0)) throw ValidationError("K", "must be > 0");
    if (n_steps < 8) throw ValidationError("n_steps", "must be >= 8");
    if (sim_steps < 1) throw ValidationError("sim_steps", "must be >= 1");
    if (!(lambda0 >= 1e6)) throw ValidationError("lambda0", "must be >= 1e6");
    if (ode_steps < 1000) throw ValidationError("ode_steps", "must be >= 1000");
  }
}

OffspringDistribution ModelSpec::distribution() const {
  if (!offspring) throw ValidationError("offspring.probs", "required for galton_watson");
  return OffspringDistribution(*offspring);
}

FellerModel ModelSpec::feller_model() const {
  if (!alpha || !sigma2 || !T) throw ValidationError("kind", "feller parameters missing");
  return FellerModel{*alpha, *sigma2, *T, K};
}

json ModelSpec::to_json() const {
  json j;
  j["kind"] = kind_name(kind);
  if (offspring) j["offspring"] = {{"probs", num_array(*offspring)}};
  if (alpha) j["alpha"] = *alpha;
  if (sigma2) j["sigma2"] = *sigma2;
  if (T) j["T"] = *T;
  j["K"] = K;
  if (N) j["N"] = *N;
  if (kind == ModelKind::galton_watson) {
    j["grid_points"] = grid_points;
    j["grid_max"] = grid_max;
    j["conditioning"] = conditioning_name(conditioning);
  } else {
    j["n_steps"] = n_steps;
    j["sim_steps"] = sim_steps;
    j["scheme"] = scheme_name(scheme);
    j["lambda0"] = lambda0;
    j["ode_steps"] = ode_steps;
  }
  j["reps"] = reps;
  j["seed"] = seed;
  return j;
}

ModelSpec parse_model_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("", "model spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKnownFields.contains(key)) throw ValidationError(key, "unknown field");

  ModelSpec spec;
  if (!j.contains("kind")) throw ValidationError("kind", "required");
  const std::string kind = string_field(j, "kind");
  if (kind == "galton_watson") {
    spec.kind = ModelKind::galton_watson;
  } else if (kind == "feller") {
    spec.kind = ModelKind::feller;
  } else {
    throw ValidationError("kind", "must be \"galton_watson\" or \"feller\"");
  }

  if (j.contains("offspring")) {
    const auto& o = j["offspring"];
    if (!o.is_object() || !o.contains("probs") || !o["probs"].is_array())
      throw ValidationError("offspring.probs", "expected an array of probabilities");
    std::vector<double> probs;
    for (const auto& p : o["probs"]) {
      if (!p.is_number()) throw ValidationError("offspring.probs", "entries must be numbers");
      probs.push_back(p.get<double>());
    }
    spec.offspring = std::move(probs);
  }
  if (j.contains("alpha")) spec.alpha = number_field(j, "alpha");
  if (j.contains("sigma2")) spec.sigma2 = number_field(j, "sigma2");
  if (j.contains("T")) spec.T = number_field(j, "T");
  if (!j.contains("K")) throw ValidationError("K", "required");
  spec.K = number_field(j, "K");
  if (j.contains("N")) spec.N = uint_field(j, "N");
  if (j.contains("grid_points")) spec.grid_points = uint_field(j, "grid_points");
  if (j.contains("grid_max")) spec.grid_max = number_field(j, "grid_max");
  if (j.contains("n_steps")) spec.n_steps = uint_field(j, "n_steps");
  if (j.contains("sim_steps")) spec.sim_steps = uint_field(j, "sim_steps");
  if (j.contains("reps")) spec.reps = uint_field(j, "reps");
  if (j.contains("seed")) spec.seed = uint_field(j, "seed");
  if (j.contains("lambda0")) spec.lambda0 = number_field(j, "lambda0");
  if (j.contains("ode_steps")) spec.ode_steps = uint_field(j, "ode_steps");
  if (j.contains("scheme")) {
    const auto s = string_field(j, "scheme");
    if (s == "exact") spec.scheme = FellerScheme::exact_poisson_gamma;
    else if (s == "euler") spec.scheme = FellerScheme::euler_full_truncation;
    else throw ValidationError("scheme", "must be \"exact\" or \"euler\"");
  }
  if (j.contains("conditioning")) {
    const auto s = string_field(j, "conditioning");
    if (s == "at_horizon") spec.conditioning = Conditioning::at_horizon;
    else if (s == "by_horizon") spec.conditioning = Conditioning::by_horizon;
    else throw ValidationError("conditioning", "must be \"at_horizon\" or \"by_horizon\"");
  }
  spec.validate();
  return spec;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::closed_form: return "closed_form";
    case Provenance::paper_printed: return "paper_printed";
    case Provenance::dp_oracle: return "dp_oracle";
    case Provenance::variational_oracle: return "variational_oracle";
    case Provenance::riccati_oracle: return "riccati_oracle";
    case Provenance::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::closed_form, Provenance::paper_printed, Provenance::dp_oracle,
                 Provenance::variational_oracle, Provenance::riccati_oracle, Provenance::monte_carlo})
    if (to_string(p) == s) return p;
  throw ValidationError("exponents.provenance", "unknown provenance label \"" + std::string(s) + "\"");
}

json report_to_json(const RateReport& r, bool include_timings) {
  json j;
  j["command"] = r.command;
  j["kind"] = kind_name(r.kind);
  j["model"] = r.model;
  j["most_likely_path"] = {{"index", num_array(r.path_index)}, {"u_star", num_array(r.u_star)}};
  if (!r.u_oracle.empty()) j["most_likely_path"]["u_oracle"] = num_array(r.u_oracle);
  j["rate_value"] = num(r.rate_value);
  j["extinction_exponent"] = num(r.extinction_exponent);
  j["exponents"] = json::array();
  for (const auto& e : r.exponents) {
    json je = {{"name", e.name}, {"provenance", to_string(e.provenance)}, {"rate", num(e.rate)}};
    if (e.std_error) je["std_error"] = num(*e.std_error);
    j["exponents"].push_back(je);
  }
  j["discrepancy_flags"] = json::object();
  for (const auto& [k, v] : r.discrepancy_flags) j["discrepancy_flags"][k] = v;
  if (r.monte_carlo) {
    const auto& m = r.monte_carlo->result;
    json jm = {{"reps", m.reps},
               {"n_extinct", m.n_extinct},
               {"frequency", num(m.frequency)},
               {"std_error", num(m.std_error)},
               {"wilson_95", {num(m.wilson_low), num(m.wilson_high)}},
               {"n_conditioned", m.n_conditioned},
               {"conditioning", r.monte_carlo->conditioning},
               {"conditional_mean_path", num_array(m.conditional_mean_path)},
               {"conditional_path_se", num_array(m.conditional_path_se)},
               {"mean_path", num_array(m.mean_path)},
               {"mean_path_se", num_array(m.mean_path_se)}};
    if (!r.monte_carlo->scheme.empty()) jm["scheme"] = r.monte_carlo->scheme;
    j["monte_carlo"] = jm;
  }
  if (include_timings) {
    j["timings_ms"] = json::object();
    for (const auto& [k, v] : r.timings_ms) j["timings_ms"][k] = v;
  }
  return j;
}

RateReport report_from_json(const json& j) {
  validate_report_json(j);
  RateReport r;
  r.command = j.at("command").get<std::string>();
  r.kind = j.at("kind").get<std::string>() == "feller" ? ModelKind::feller : ModelKind::galton_watson;
  r.model = j.at("model");
  const auto& p = j.at("most_likely_path");
  r.path_index = from_num_array(p.at("index"));
  r.u_star = from_num_array(p.at("u_star"));
  if (p.contains("u_oracle")) r.u_oracle = from_num_array(p["u_oracle"]);
  r.rate_value = from_num(j.at("rate_value"));
  r.extinction_exponent = from_num(j.at("extinction_exponent"));
  for (const auto& e : j.at("exponents")) {
    ExponentEntry entry{e.at("name").get<std::string>(), provenance_from_string(e.at("provenance").get<std::string>()),
                        from_num(e.at("rate")), std::nullopt};
    if (e.contains("std_error")) entry.std_error = from_num(e["std_error"]);
    r.exponents.push_back(entry);
  }
  for (const auto& [k, v] : j.at("discrepancy_flags").items()) r.discrepancy_flags[k] = v.get<bool>();
  if (j.contains("monte_carlo")) {
    const auto& jm = j["monte_carlo"];
    McSummary s;
    s.result.reps = jm.at("reps").get<std::uint64_t>();
    s.result.n_extinct = jm.at("n_extinct").get<std::uint64_t>();
    s.result.frequency = from_num(jm.at("frequency"));
    s.result.std_error = from_num(jm.at("std_error"));
    s.result.wilson_low = from_num(jm.at("wilson_95").at(0));
    s.result.wilson_high = from_num(jm.at("wilson_95").at(1));
    s.result.n_conditioned = jm.at("n_conditioned").get<std::uint64_t>();
    s.result.conditional_mean_path = from_num_array(jm.at("conditional_mean_path"));
    s.result.conditional_path_se = from_num_array(jm.at("conditional_path_se"));
    s.result.mean_path = from_num_array(jm.at("mean_path"));
    s.result.mean_path_se = from_num_array(jm.at("mean_path_se"));
    s.conditioning = jm.at("conditioning").get<std::string>();
    if (jm.contains("scheme")) s.scheme = jm["scheme"].get<std::string>();
    r.monte_carlo = std::move(s);
  }
  if (j.contains("timings_ms"))
    for (const auto& [k, v] : j["timings_ms"].items()) r.timings_ms[k] = v.get<double>();
  return r;
}

void validate_report_json(const json& j) {
  if (!j.is_object()) throw ValidationError("", "report must be a JSON object");
  for (const char* key : {"command", "kind", "model", "most_likely_path", "rate_value", "extinction_exponent",
                          "exponents", "discrepancy_flags"})
    if (!j.contains(key)) throw ValidationError(key, "missing from report");
  if (!j["exponents"].is_array()) throw ValidationError("exponents", "expected an array");
  for (std::size_t i = 0; i < j["exponents"].size(); ++i) {
    const auto& e = j["exponents"][i];
    const std::string where = "exponents[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("provenance") || !e["provenance"].is_string())
      throw ValidationError(where + ".provenance", "every exponent needs a provenance label");
    const Provenance p = provenance_from_string(e["provenance"].get<std::string>());
    if (!e.contains("rate")) throw ValidationError(where + ".rate", "missing");
    if (p == Provenance::monte_carlo && !e.contains("std_error"))
      throw ValidationError(where + ".std_error", "Monte Carlo entries need a standard error");
  }
}

namespace {

json round_floats(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = round_floats(v);
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(round_floats(v));
    return out;
  }
  if (j.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", j.get<double>());
    return std::stod(buf);
  }
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(std::ostringstream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_field(fields[i]);
  }
  os << "\r\n";
}

}  // namespace

std::string canonical_json(const json& j) { return round_floats(j).dump(2) + "\n"; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string emit_csv(const RateReport& r, CsvKind which) {
  std::ostringstream os;
  const bool discrete = r.kind == ModelKind::galton_watson;
  switch (which) {
    case CsvKind::path: {
      const bool with_oracle = !r.u_oracle.empty() && r.u_oracle.size() == r.u_star.size();
      std::vector<double> cond;
      if (discrete && r.monte_carlo && r.monte_carlo->result.conditional_mean_path.size() == r.u_star.size())
        cond = r.monte_carlo->result.conditional_mean_path;
      std::vector<std::string> header{discrete ? "n" : "t", "u_star"};
      if (with_oracle || !discrete) header.emplace_back("u_oracle");
      if (!cond.empty()) header.emplace_back("conditional_mean");
      write_row(os, header);
      for (std::size_t i = 0; i < r.u_star.size(); ++i) {
        std::vector<std::string> row{format_double(r.path_index[i]), format_double(r.u_star[i])};
        if (with_oracle) row.push_back(format_double(r.u_oracle[i]));
        else if (!discrete) row.emplace_back("");
        if (!cond.empty()) row.push_back(format_double(cond[i]));
        write_row(os, row);
      }
      break;
    }
    case CsvKind::exponents: {
      write_row(os, {"name", "provenance", "rate", "std_error"});
      for (const auto& e : r.exponents)
        write_row(os, {e.name, std::string(to_string(e.provenance)), format_double(e.rate),
                       e.std_error ? format_double(*e.std_error) : ""});
      break;
    }
    case CsvKind::mc: {
      write_row(os, {discrete ? "n" : "t", "mean", "mean_se", "conditional_mean", "conditional_se"});
      if (!r.monte_carlo) break;
      const auto& m = r.monte_carlo->result;
      const std::size_t len = m.mean_path.size();
      const double horizon = discrete ? static_cast<double>(len - 1) : r.model.value("T", 1.0);
      for (std::size_t i = 0; i < len; ++i) {
        const double idx = discrete ? static_cast<double>(i) : horizon * static_cast<double>(i) / static_cast<double>(len - 1);
        const bool has_cond = i < m.conditional_mean_path.size();
        write_row(os, {format_double(idx), format_double(m.mean_path[i]), format_double(m.mean_path_se[i]),
                       has_cond ? format_double(m.conditional_mean_path[i]) : "",
                       has_cond ? format_double(m.conditional_path_se[i]) : ""});
      }
      break;
    }
  }
  return os.str();
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  CsvTable t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

}  // namespace extinctia
