#include "lps/serialize.hpp"

#include <fstream>

#include "lps/error.hpp"

namespace lps {

namespace {

constexpr const char* kFormat = "lps-graph";
constexpr int kVersion = 1;

template <class T>
T field(const nlohmann::json& j, const char* name) {
  require(j.contains(name), ErrorCode::Validation, std::string("graph file: missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("graph file: field '") + name + "': " + e.what());
  }
}

}  // namespace

nlohmann::json graph_to_json(const WeightedGraph& g) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["origin"] = g.origin();
  j["measure"] = g.measure();
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v, e.conductance});
  j["edges"] = edges;
  if (g.has_positions()) j["positions"] = g.positions();
  if (!g.boundary().empty()) j["boundary"] = g.boundary();
  if (g.grid()) j["grid"] = {{"dims", g.grid()->dims}, {"spacing", g.grid()->spacing}};
  return j;
}

WeightedGraph graph_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::Validation, "graph file: top level must be an object");
  require(field<std::string>(j, "format") == kFormat, ErrorCode::Validation, "graph file: format must be 'lps-graph'");
  require(field<int>(j, "version") == kVersion, ErrorCode::Validation, "graph file: unsupported version");
  auto measure = field<std::vector<double>>(j, "measure");
  std::vector<Edge> edges;
  for (const auto& e : field<nlohmann::json>(j, "edges")) {
    require(e.is_array() && e.size() == 3, ErrorCode::Validation, "graph file: edges must be [u, v, conductance]");
    edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
  }
  std::vector<std::vector<double>> pos;
  if (j.contains("positions")) pos = field<std::vector<std::vector<double>>>(j, "positions");
  std::vector<bool> boundary;
  if (j.contains("boundary")) boundary = field<std::vector<bool>>(j, "boundary");
  std::optional<GridShape> grid;
  if (j.contains("grid")) {
    const auto& gj = j.at("grid");
    grid = GridShape{field<std::vector<std::size_t>>(gj, "dims"), field<double>(gj, "spacing")};
  }
  const std::string origin = j.value("origin", std::string("custom"));
  return WeightedGraph(std::move(measure), std::move(edges), std::move(pos), std::move(boundary), origin,
                       std::move(grid));
}

nlohmann::json bundle_to_json(const OperatorBundle& b) {
  nlohmann::json j = graph_to_json(b.graph());
  std::vector<double> v(b.graph().n_vertices(), 0.0);
  for (std::size_t i = 0; i < b.dim(); ++i) v[b.active_vertices()[i]] = b.potential()[static_cast<Eigen::Index>(i)];
  j["potential"] = v;
  j["form"] = b.form() == OperatorForm::Divergence ? "divergence" : "schroedinger";
  if (b.coefficients()) {
    j["edge_coefficients"] = b.coefficients()->edge_coefficient;
    j["ellipticity"] = b.coefficients()->ellipticity;
  }
  return j;
}

OperatorBundle bundle_from_json(const nlohmann::json& j) {
  const WeightedGraph g = graph_from_json(j);
  const std::string form = j.value("form", std::string("schroedinger"));
  if (form == "divergence") {
    CoefficientField a;
    a.edge_coefficient = field<std::vector<double>>(j, "edge_coefficients");
    a.ellipticity = field<double>(j, "ellipticity");
    return attach_divergence_form(g, a);
  }
  require(form == "schroedinger", ErrorCode::Validation, "graph file: form must be schroedinger or divergence");
  Field v = Field::Zero(static_cast<Eigen::Index>(g.n_vertices()));
  if (j.contains("potential")) {
    const auto pv = field<std::vector<double>>(j, "potential");
    require(pv.size() == g.n_vertices(), ErrorCode::Validation, "graph file: potential has the wrong length");
    v = Eigen::Map<const Field>(pv.data(), static_cast<Eigen::Index>(pv.size()));
  }
  return attach_potential(g, v);
}

void save_bundle(const std::filesystem::path& path, const OperatorBundle& b) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + path.string());
  os << bundle_to_json(b).dump(1) << '\n';
}

OperatorBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::Validation, "cannot read graph file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, "graph file " + path.string() + " is not valid JSON: " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace lps
