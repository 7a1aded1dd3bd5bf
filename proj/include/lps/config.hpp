#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lps/bundle.hpp"
#include "lps/functionals.hpp"

namespace lps {

inline constexpr int kConfigSchemaVersion = 1;

struct GraphSpec {
  std::string builder = "path";  ///< path | grid | radial | connected-sum | file
  std::size_t size = 32;         ///< path length, grid side, radial m, connected-sum side
  std::vector<std::size_t> dims;  ///< grid only; default {size, size}
  double spacing = 0.0;          ///< 0: 1/size for paths, 1/(size-1) for grids
  bool dirichlet = false;
  int n_dim = 2;
  double r_max = 2.5;
  std::size_t neck = 2;
  std::string file;
};

struct PotentialSpec {
  std::string kind = "zero";  ///< zero | constant | power | values
  double value = 1.0;         ///< constant value, or prefactor of |x|^exponent
  double exponent = 0.0;
  std::vector<double> values;
};

struct OperatorSpec {
  std::string form = "schroedinger";  ///< schroedinger | divergence
  std::string coefficients = "scalar";  ///< scalar | checkerboard
  double low = 1.0;
  double high = 4.0;
};

OperatorBundle build_bundle(const GraphSpec& g, const PotentialSpec& v = {}, const OperatorSpec& op = {});

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string scenario;
  GraphSpec graph;
  PotentialSpec potential;
  OperatorSpec op;
  std::vector<FunctionalSpec> functionals;
  std::vector<double> p;
  std::size_t budget = 24;
  std::vector<std::uint64_t> seeds;  ///< mandatory, no wall-clock default
  std::filesystem::path output_dir = "lps-out";
  std::string format = "csv";  ///< csv | structured
  std::optional<std::size_t> vertex_cap;
  nlohmann::json source;  ///< the parsed document, for the digest
};

/// Parses and validates; every Error(Validation) message starts with the
/// offending field path (e.g. "functionals[0].kind: ...").
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string config_digest(const ExperimentConfig& c);

struct RunSummary {
  int exit_status = 0;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

/// Runs every (functional, p, seed) combination and writes
/// <output_dir>/<scenario>.csv or .json. Numeric failures become report rows
/// with an error column instead of aborting the run.
RunSummary run(const ExperimentConfig& c);

FunctionalSpec functional_from_json(const nlohmann::json& j, const std::string& path);
MultiplierFunction multiplier_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace lps
