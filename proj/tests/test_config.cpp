#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "lps/config.hpp"
#include "lps/error.hpp"
#include "lps/verify.hpp"

using namespace lps;
using nlohmann::json;

namespace {

json minimal(const std::string& dir) {
  return json{{"schema_version", 1},
              {"scenario", "p3"},
              {"graph", {{"builder", "path"}, {"size", 3}, {"spacing", 1.0}}},
              {"functionals", json::array({{{"kind", "H"}, {"gamma", "gradient"}}})},
              {"p", {2.0}},
              {"budget", 6},
              {"seeds", {1, 2}},
              {"output", {{"dir", dir}, {"format", "csv"}}}};
}

std::string validation_message(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    return e.what();
  }
  FAIL("config was accepted");
  return {};
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("validation errors name the offending field") {
  const json base = minimal("unused");
  CHECK_NOTHROW(parse_config(base));

  json j = base;
  j["functionals"][0]["kind"] = "H_sharp";
  CHECK(starts_with(validation_message(j), "functionals[0].kind"));

  j = base;
  j.erase("seeds");
  CHECK(starts_with(validation_message(j), "seeds"));

  j = base;
  j["schema_version"] = 2;
  CHECK(starts_with(validation_message(j), "schema_version"));

  j = base;
  j["graph"]["builder"] = "torus";
  CHECK(starts_with(validation_message(j), "graph.builder"));

  j = base;
  j["graph"]["sizee"] = 3;
  CHECK(starts_with(validation_message(j), "graph.sizee"));

  j = base;
  j["p"] = {0.5};
  CHECK(starts_with(validation_message(j), "p"));

  j = base;
  j["functionals"][0]["multipliers"] = json::array({{{"kind", "resolvent"}, {"delta", 0.3}}});
  CHECK(starts_with(validation_message(j), "functionals[0].multipliers[0]"));

  j = base;
  j["output"]["format"] = "xml";
  CHECK(starts_with(validation_message(j), "output.format"));
}

TEST_CASE("minimal P3 run reports the half identity") {
  const auto dir = scratch("lps_config_p3");
  const auto c = parse_config(minimal(dir.string()));
  const auto out = run(c);
  CHECK(out.exit_status == 0);
  REQUIRE(out.files.size() == 1);
  const std::string csv = slurp(out.files[0]);
  CHECK(csv.rfind("scenario,functional,p,seed,budget,constant,witness_label,witness_hash,divergent_probes,"
                  "half_identity_lhs,half_identity_rhs,error,config_digest,version\n", 0) == 0);
  CHECK(csv.find(config_digest(c)) != std::string::npos);

  json j = minimal(dir.string());
  j["output"]["format"] = "structured";
  const auto doc = json::parse(slurp(run(parse_config(j)).files[0]));
  REQUIRE(doc["rows"].size() == 2);
  for (const auto& row : doc["rows"]) {
    CHECK(row["half_identity_lhs"].get<double>() == doctest::Approx(row["half_identity_rhs"].get<double>()).epsilon(1e-8));
    CHECK(row["half_identity_rhs"].get<double>() > 0.0);
  }
  CHECK(doc["version"] == version_string());
  std::filesystem::remove_all(dir);
}

TEST_CASE("reruns are byte-identical") {
  for (const std::string format : {"csv", "structured"}) {
    const auto d1 = scratch("lps_config_rerun");
    json j = minimal(d1.string());
    j["graph"] = {{"builder", "grid"}, {"size", 6}, {"dirichlet", true}};
    j["potential"] = {{"kind", "constant"}, {"value", 0.5}};
    j["functionals"] = json::array({{{"kind", "H"}}, {{"kind", "Q"}}});
    j["p"] = {1.5, 3.0};
    j["output"]["format"] = format;
    const std::string first = slurp(run(parse_config(j)).files[0]);
    const std::string second = slurp(run(parse_config(j)).files[0]);
    CHECK_FALSE(first.empty());
    CHECK(first == second);
    std::filesystem::remove_all(d1);
  }
}

TEST_CASE("numeric failures become report rows") {
  const auto dir = scratch("lps_config_err");
  json j = minimal(dir.string());
  j["functionals"] = json::array({{{"kind", "H_F"}, {"outer", {{"kind", "constant"}}}}});
  const auto out = run(parse_config(j));
  CHECK(out.exit_status == 0);
  CHECK(slurp(out.files[0]).find("divergence") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bundle builders") {
  GraphSpec g;
  g.builder = "connected-sum";
  g.size = 8;
  g.neck = 1;
  CHECK(build_bundle(g).dim() == 2 * 63 - 1);
  GraphSpec r;
  r.builder = "radial";
  r.n_dim = 3;
  r.size = 20;
  PotentialSpec v;
  v.kind = "power";
  v.exponent = -1.5;
  CHECK(build_bundle(r, v).potential().minCoeff() > 0.0);
  GraphSpec grid;
  grid.builder = "grid";
  grid.size = 6;
  OperatorSpec op;
  op.form = "divergence";
  op.coefficients = "checkerboard";
  CHECK(build_bundle(grid, {}, op).coefficients().has_value());
}
