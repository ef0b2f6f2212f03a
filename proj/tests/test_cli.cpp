#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "extinctia/cli.hpp"

namespace fs = std::filesystem;
using extinctia::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("extinctia_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_spec(const fs::path& dir, const std::string& json) {
  const fs::path p = dir / "spec.json";
  std::ofstream(p) << json;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kBinarySpec = R"({"kind":"galton_watson","offspring":{"probs":[0.5,0,0.5]},"K":1,"N":2,"grid_points":4096})";
const char* kFellerSpec = R"({"kind":"feller","alpha":0,"sigma2":1,"T":1,"K":2})";

double exponent(const nlohmann::json& report, const std::string& provenance, const std::string& name = "") {
  for (const auto& e : report["exponents"])
    if (e["provenance"] == provenance && (name.empty() || e["name"] == name)) return e["rate"].get<double>();
  return std::nan("");
}

}  // namespace

TEST_CASE("analyze-gw reports the closed form and Bellman oracle") {
  const auto dir = scratch("gw");
  const auto r = invoke({"analyze-gw", "--spec", write_spec(dir, kBinarySpec).string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["rate_value"].get<double>() == doctest::Approx(0.4700036292457356).epsilon(1e-9));
  CHECK(j["extinction_exponent"].get<double>() == doctest::Approx(std::log(0.625)).epsilon(1e-14));
  CHECK(std::abs(exponent(j, "dp_oracle") - 0.4700036292457356) < 1e-3);
  CHECK_FALSE(j["discrepancy_flags"]["exponent_identity_violated"].get<bool>());
}

TEST_CASE("analyze-feller flags the printed constant") {
  const auto dir = scratch("feller");
  const auto r = invoke({"analyze-feller", "--spec", write_spec(dir, kFellerSpec).string(), "--quiet"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(exponent(j, "closed_form") == 2.0);
  CHECK(exponent(j, "paper_printed", "theorem_constant") == 1.0);
  CHECK(exponent(j, "paper_printed", "corollary_constant") == 0.5);
  CHECK(j["discrepancy_flags"]["theorem_constant"].get<bool>());
  CHECK(j["discrepancy_flags"]["corollary_constant"].get<bool>());
  CHECK(std::abs(exponent(j, "variational_oracle") - 2.0) < 1e-3);
  CHECK(std::abs(exponent(j, "riccati_oracle") - 2.0) < 1e-6);
}

TEST_CASE("output directory and byte-identical reruns") {
  const auto dir = scratch("determinism");
  const auto spec = write_spec(dir, R"({"kind":"galton_watson","offspring":{"probs":[0.5,0,0.5]},"K":5,"N":3,"grid_points":512,"reps":5000,"seed":3})");
  REQUIRE(invoke({"simulate-gw", "--spec", spec.string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(invoke({"simulate-gw", "--spec", spec.string(), "--out", (dir / "b").string()}).code == 0);
  for (const char* f : {"report.json", "path.csv", "exponents.csv", "mc.csv"}) {
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  REQUIRE(invoke({"simulate-gw", "--spec", spec.string(), "--out", (dir / "c").string(), "--seed", "4"}).code == 0);
  CHECK(slurp(dir / "a" / "report.json") != slurp(dir / "c" / "report.json"));
}

TEST_CASE("command-line overrides win over the spec") {
  const auto dir = scratch("overrides");
  const auto spec = write_spec(dir, R"({"kind":"feller","alpha":0,"sigma2":1,"T":1,"K":2,"reps":10,"sim_steps":4})");
  const auto r = invoke({"simulate-feller", "--spec", spec.string(), "--reps", "321", "--seed", "9", "--scheme",
                         "euler", "--grid", "16", "--quiet"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["monte_carlo"]["reps"] == 321);
  CHECK(j["monte_carlo"]["scheme"] == "euler");
  CHECK(j["model"]["seed"] == 9);
  CHECK(j["model"]["n_steps"] == 16);
}

TEST_CASE("validation failures exit 1 with the field path") {
  const auto dir = scratch("errors");
  const auto bad = write_spec(dir, R"({"kind":"galton_watson","offspring":{"probs":[0.5,0,0.49]},"K":20,"N":4})");
  const auto r = invoke({"analyze-gw", "--spec", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("offspring.probs") != std::string::npos);

  CHECK(invoke({"analyze-gw", "--spec", (dir / "missing.json").string()}).code == 1);
  CHECK(invoke({"analyze-gw"}).code == 1);
  CHECK(invoke({"no-such-command"}).code == 1);
  const auto feller = write_spec(dir, kFellerSpec);
  CHECK(invoke({"analyze-gw", "--spec", feller.string()}).code == 1);
  CHECK(invoke({"simulate-feller", "--spec", feller.string()}).code == 1);  // reps = 0
}

TEST_CASE("oracle subcommands") {
  const auto dir = scratch("oracles");
  const auto gw = write_spec(dir, kBinarySpec);
  const auto dp = nlohmann::json::parse(invoke({"oracle-dp", "--spec", gw.string(), "--grid", "1024"}).out);
  CHECK(dp["model"]["grid_points"] == 1024);
  CHECK(std::isfinite(exponent(dp, "dp_oracle")));

  std::ofstream(dir / "f.json") << R"({"kind":"feller","alpha":1,"sigma2":1,"T":1,"K":1})";
  const auto var = nlohmann::json::parse(invoke({"oracle-variational", "--spec", (dir / "f.json").string()}).out);
  CHECK(std::abs(exponent(var, "variational_oracle") - 3.163953413738653) < 1e-3);
  const auto ric = nlohmann::json::parse(invoke({"oracle-riccati", "--spec", (dir / "f.json").string()}).out);
  CHECK(std::abs(exponent(ric, "riccati_oracle") - 3.163953413738653) < 1e-5);
}

TEST_CASE("verify: default suite passes, perturbation fails with exit 2") {
  CHECK(invoke({"verify", "--quiet"}).code == 0);
  const auto perturbed = invoke({"verify", "--perturb", "1.01"});
  CHECK(perturbed.code == 2);
  CHECK(perturbed.out.find("FAIL") != std::string::npos);
}

TEST_CASE("verify with a spec") {
  const auto dir = scratch("verify_spec");
  CHECK(invoke({"verify", "--spec", write_spec(dir, kBinarySpec).string(), "--quiet"}).code == 0);
  CHECK(invoke({"verify", "--spec", write_spec(dir, kFellerSpec).string(), "--reps", "50000", "--quiet"}).code == 0);
}

TEST_CASE("figure preset") {
  const auto r = invoke({"figure"});
  REQUIRE(r.code == 0);
  const auto t = extinctia::parse_csv(r.out);
  CHECK(t.header == std::vector<std::string>{"p", "n", "u_star"});
  CHECK(t.rows.size() == 27);
  CHECK(std::stod(t.rows[8][2]) == 0.0);
}

TEST_CASE("golden report") {
  const auto dir = scratch("golden");
  const auto r = invoke({"analyze-gw", "--spec", write_spec(dir, kBinarySpec).string()});
  REQUIRE(r.code == 0);
  const std::string canon = extinctia::canonical_json(nlohmann::json::parse(r.out));
  const fs::path golden = fs::path(EXTINCTIA_TEST_DATA) / "golden" / "analyze_gw_binary.json";
  REQUIRE(fs::exists(golden));
  CHECK(canon == slurp(golden));
}
