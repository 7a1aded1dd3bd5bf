#include "lps/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lps/error.hpp"
#include "lps/graph.hpp"
#include "lps/serialize.hpp"
#include "lps/verify.hpp"

namespace lps {

OperatorBundle build_bundle(const GraphSpec& g, const PotentialSpec& v, const OperatorSpec& op) {
  WeightedGraph graph;
  if (g.builder == "path") {
    graph = build_path_graph(g.size, g.spacing > 0 ? g.spacing : 1.0 / static_cast<double>(g.size));
  } else if (g.builder == "grid") {
    const auto dims = g.dims.empty() ? std::vector<std::size_t>{g.size, g.size} : g.dims;
    graph = build_grid(dims, g.spacing > 0 ? g.spacing : 1.0 / static_cast<double>(dims.front() - 1), g.dirichlet);
  } else if (g.builder == "radial") {
    graph = build_radial_graph(g.n_dim, g.r_max, g.size);
  } else if (g.builder == "connected-sum") {
    graph = build_connected_sum(g.n_dim, g.size, g.neck);
  } else if (g.builder == "file") {
    const OperatorBundle b = load_bundle(g.file);
    if (v.kind == "zero" && op.form == "schroedinger") return b;
    graph = b.graph();
  } else {
    fail(ErrorCode::Validation, "graph.builder: unknown builder '" + g.builder + "'");
  }

  if (op.form == "divergence") {
    require(v.kind == "zero", ErrorCode::Validation, "potential.kind: divergence-form operators take no potential");
    if (op.coefficients == "scalar") return attach_divergence_form(graph, CoefficientField::scalar(graph, op.low));
    if (op.coefficients == "checkerboard")
      return attach_divergence_form(graph, CoefficientField::checkerboard(graph, op.low, op.high));
    fail(ErrorCode::Validation, "operator.coefficients: unknown coefficient field '" + op.coefficients + "'");
  }
  require(op.form == "schroedinger", ErrorCode::Validation, "operator.form: unknown form '" + op.form + "'");

  const auto n = static_cast<Eigen::Index>(graph.n_vertices());
  if (v.kind == "zero") return attach_potential(graph, Field::Zero(n));
  if (v.kind == "constant") return attach_potential(graph, Field::Constant(n, v.value));
  if (v.kind == "power") {
    const double a = v.value, e = v.exponent;
    return attach_potential(graph, [a, e](const std::vector<double>& x) {
      double r2 = 0.0;
      for (double c : x) r2 += c * c;
      return a * std::pow(std::sqrt(r2), e);
    });
  }
  if (v.kind == "values") {
    require(v.values.size() == graph.n_vertices(), ErrorCode::Validation,
            "potential.values: expected " + std::to_string(graph.n_vertices()) + " entries");
    return attach_potential(graph, Eigen::Map<const Field>(v.values.data(), n));
  }
  fail(ErrorCode::Validation, "potential.kind: unknown potential '" + v.kind + "'");
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
  fail(ErrorCode::Validation, path + ": " + msg);
}

template <class T>
T get(const nlohmann::json& j, const std::string& name, const std::string& path) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    invalid(path + name, "missing or of the wrong type");
  }
}

template <class T>
T get_or(const nlohmann::json& j, const std::string& name, const std::string& path, T fallback) {
  if (!j.contains(name)) return fallback;
  return get<T>(j, name, path);
}

void check_keys(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) invalid(path.empty() ? "config" : path.substr(0, path.size() - 1), "must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) invalid(path + k, "unknown field");
  }
}

}  // namespace

MultiplierFunction multiplier_from_json(const nlohmann::json& j, const std::string& path) {
  check_keys(j, path + ".", {"kind", "value", "delta", "exponent", "scale", "dilation"});
  const std::string kind = get<std::string>(j, "kind", path + ".");
  MultiplierFunction m;
  try {
    if (kind == "constant") m = MultiplierFunction::constant(get_or(j, "value", path + ".", 1.0));
    else if (kind == "exp") m = MultiplierFunction::exp_decay();
    else if (kind == "zexp") m = MultiplierFunction::z_exp();
    else if (kind == "poisson") m = MultiplierFunction::poisson();
    else if (kind == "resolvent") m = MultiplierFunction::resolvent_power(get_or(j, "delta", path + ".", 1.0));
    else if (kind == "bump") m = MultiplierFunction::bump();
    else if (kind == "triangle") m = MultiplierFunction::triangle();
    else if (kind == "power") m = MultiplierFunction::power(get<double>(j, "exponent", path + "."));
    else invalid(path + ".kind", "unknown multiplier '" + kind + "'");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Validation) throw;
    invalid(path, e.what());
  }
  if (j.contains("scale")) m = m.times(get<double>(j, "scale", path + "."));
  if (j.contains("dilation")) m = m.dilated(get<double>(j, "dilation", path + "."));
  return m;
}

FunctionalSpec functional_from_json(const nlohmann::json& j, const std::string& path) {
  check_keys(j, path + ".", {"kind", "gamma", "combine", "multipliers", "outer"});
  FunctionalSpec s;
  try {
    s.kind = functional_kind_from_string(get<std::string>(j, "kind", path + "."));
  } catch (const Error& e) {
    invalid(path + ".kind", e.what());
  }
  try {
    s.gamma = gamma_from_string(get_or<std::string>(j, "gamma", path + ".", "both"));
  } catch (const Error& e) {
    invalid(path + ".gamma", e.what());
  }
  const auto comb = get_or<std::string>(j, "combine", path + ".", "sum");
  if (comb == "sum") s.combine = ChannelCombination::Sum;
  else if (comb == "l2") s.combine = ChannelCombination::L2;
  else invalid(path + ".combine", "expected sum or l2");
  if (j.contains("multipliers")) {
    const auto& arr = j.at("multipliers");
    if (!arr.is_array()) invalid(path + ".multipliers", "must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.multipliers.push_back(multiplier_from_json(arr[i], path + ".multipliers[" + std::to_string(i) + "]"));
  }
  if (j.contains("outer")) {
    if (s.kind != FunctionalKind::HF) invalid(path + ".outer", "only kind H_F takes an outer function");
    s.outer = multiplier_from_json(j.at("outer"), path + ".outer");
  }
  if (s.kind == FunctionalKind::G && s.multipliers.empty()) invalid(path + ".multipliers", "kind G needs multipliers");
  return s;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  check_keys(j, "", {"schema_version", "scenario", "graph", "potential", "operator", "functionals", "p", "budget",
                     "seeds", "output", "vertex_cap"});
  ExperimentConfig c;
  c.source = j;
  c.schema_version = get<int>(j, "schema_version", "");
  if (c.schema_version != kConfigSchemaVersion)
    invalid("schema_version", "unsupported version " + std::to_string(c.schema_version));
  c.scenario = get<std::string>(j, "scenario", "");
  if (c.scenario.empty() || c.scenario.find_first_of("/\\") != std::string::npos)
    invalid("scenario", "must be a non-empty name without path separators");

  if (!j.contains("graph")) invalid("graph", "missing");
  const auto& gj = j.at("graph");
  check_keys(gj, "graph.", {"builder", "size", "dims", "spacing", "dirichlet", "n_dim", "r_max", "neck", "file"});
  c.graph.builder = get<std::string>(gj, "builder", "graph.");
  if (c.graph.builder != "path" && c.graph.builder != "grid" && c.graph.builder != "radial" &&
      c.graph.builder != "connected-sum" && c.graph.builder != "file")
    invalid("graph.builder", "unknown builder '" + c.graph.builder + "'");
  c.graph.size = get_or<std::size_t>(gj, "size", "graph.", c.graph.size);
  c.graph.dims = get_or<std::vector<std::size_t>>(gj, "dims", "graph.", {});
  c.graph.spacing = get_or<double>(gj, "spacing", "graph.", 0.0);
  c.graph.dirichlet = get_or<bool>(gj, "dirichlet", "graph.", false);
  c.graph.n_dim = get_or<int>(gj, "n_dim", "graph.", 2);
  c.graph.r_max = get_or<double>(gj, "r_max", "graph.", 2.5);
  c.graph.neck = get_or<std::size_t>(gj, "neck", "graph.", 2);
  c.graph.file = get_or<std::string>(gj, "file", "graph.", "");
  if (c.graph.builder == "file" && c.graph.file.empty()) invalid("graph.file", "required for builder 'file'");

  if (j.contains("potential")) {
    const auto& pj = j.at("potential");
    check_keys(pj, "potential.", {"kind", "value", "exponent", "values"});
    c.potential.kind = get<std::string>(pj, "kind", "potential.");
    c.potential.value = get_or<double>(pj, "value", "potential.", 1.0);
    c.potential.exponent = get_or<double>(pj, "exponent", "potential.", 0.0);
    c.potential.values = get_or<std::vector<double>>(pj, "values", "potential.", {});
    if (c.potential.kind != "zero" && c.potential.kind != "constant" && c.potential.kind != "power" &&
        c.potential.kind != "values")
      invalid("potential.kind", "unknown potential '" + c.potential.kind + "'");
  }
  if (j.contains("operator")) {
    const auto& oj = j.at("operator");
    check_keys(oj, "operator.", {"form", "coefficients", "low", "high"});
    c.op.form = get_or<std::string>(oj, "form", "operator.", "schroedinger");
    c.op.coefficients = get_or<std::string>(oj, "coefficients", "operator.", "scalar");
    c.op.low = get_or<double>(oj, "low", "operator.", 1.0);
    c.op.high = get_or<double>(oj, "high", "operator.", 4.0);
  }

  if (!j.contains("functionals") || !j.at("functionals").is_array() || j.at("functionals").empty())
    invalid("functionals", "must be a non-empty array");
  for (std::size_t i = 0; i < j.at("functionals").size(); ++i)
    c.functionals.push_back(functional_from_json(j.at("functionals")[i], "functionals[" + std::to_string(i) + "]"));

  c.p = get<std::vector<double>>(j, "p", "");
  if (c.p.empty()) invalid("p", "must list at least one exponent");
  for (double p : c.p)
    if (!(p > 1.0) || !std::isfinite(p)) invalid("p", "exponents must be finite and > 1");
  c.budget = get_or<std::size_t>(j, "budget", "", c.budget);
  if (c.budget == 0) invalid("budget", "must be >= 1");
  if (!j.contains("seeds")) invalid("seeds", "mandatory (no wall-clock default)");
  c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "");
  if (c.seeds.empty()) invalid("seeds", "must list at least one seed");

  if (j.contains("output")) {
    const auto& oj = j.at("output");
    check_keys(oj, "output.", {"dir", "format"});
    c.output_dir = get_or<std::string>(oj, "dir", "output.", "lps-out");
    c.format = get_or<std::string>(oj, "format", "output.", "csv");
    if (c.format != "csv" && c.format != "structured") invalid("output.format", "expected csv or structured");
  }
  if (j.contains("vertex_cap")) c.vertex_cap = get<std::size_t>(j, "vertex_cap", "");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::Validation, "config: cannot read " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("config: not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

std::string config_digest(const ExperimentConfig& c) { return digest_hex(c.source.dump()); }

RunSummary run(const ExperimentConfig& c) {
  const OperatorBundle bundle = build_bundle(c.graph, c.potential, c.op);
  const SpectralDecomposition dec = decompose(bundle, c.vertex_cap.value_or(vertex_cap_from_env()));
  const std::string digest = config_digest(c);

  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream summary;
  summary << "scenario " << c.scenario << ": " << bundle.dim() << " vertices, kernel_dim " << dec.kernel_dim << "\n";
  for (const auto& spec : c.functionals) {
    for (double p : c.p) {
      for (std::uint64_t seed : c.seeds) {
        nlohmann::json row;
        row["functional"] = spec.describe();
        row["p"] = p;
        row["seed"] = seed;
        row["budget"] = c.budget;
        try {
          const NormEstimate est = estimate_functional_norm(bundle, dec, spec, p, c.budget, seed);
          row["constant"] = est.constant;
          row["witness_label"] = est.witness_label;
          std::ostringstream h;
          h << std::hex << est.witness_hash;
          row["witness_hash"] = h.str();
          row["divergent_probes"] = est.divergent_probes;
          if (p == 2.0) {
            // ||H(w)||_2^2 with both channels in quadrature against 1/2 ||w_perp||_2^2.
            FunctionalSpec l2 = FunctionalSpec::of(FunctionalKind::H, Gamma::Both, ChannelCombination::L2);
            const Field w = est.witness;
            const Field val = lps_quadrature(bundle, dec, l2, {w}).value;
            const Field wp = dec.project_off_kernel(w);
            row["half_identity_lhs"] = bundle.inner(val, val);
            row["half_identity_rhs"] = 0.5 * bundle.inner(wp, wp);
          }
          row["error"] = "";
          summary << "  " << spec.describe() << " p=" << p << " seed=" << seed << ": constant " << est.constant << "\n";
        } catch (const Error& e) {
          row["error"] = std::string(to_string(e.code())) + ": " + e.what();
          summary << "  " << spec.describe() << " p=" << p << " seed=" << seed << ": " << row["error"].get<std::string>()
                  << "\n";
        }
        rows.push_back(row);
      }
    }
  }

  RunSummary out;
  std::filesystem::create_directories(c.output_dir);
  if (c.format == "structured") {
    nlohmann::json doc;
    doc["version"] = version_string();
    doc["config_digest"] = digest;
    doc["scenario"] = c.scenario;
    doc["vertices"] = bundle.dim();
    doc["kernel_dim"] = dec.kernel_dim;
    doc["rows"] = rows;
    const auto path = c.output_dir / (c.scenario + ".json");
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + path.string());
    os << doc.dump(2) << '\n';
    out.files.push_back(path);
  } else {
    const auto path = c.output_dir / (c.scenario + ".csv");
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + path.string());
    os << "scenario,functional,p,seed,budget,constant,witness_label,witness_hash,divergent_probes,"
          "half_identity_lhs,half_identity_rhs,error,config_digest,version\n";
    auto num = [](const nlohmann::json& r, const char* k) {
      if (!r.contains(k)) return std::string();
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", r.at(k).get<double>());
      return std::string(buf);
    };
    auto str = [](const nlohmann::json& r, const char* k) {
      std::string s = r.contains(k) ? r.at(k).get<std::string>() : "";
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    };
    for (const auto& r : rows) {
      os << c.scenario << ',' << str(r, "functional") << ',' << num(r, "p") << ',' << r["seed"].get<std::uint64_t>()
         << ',' << r["budget"].get<std::size_t>() << ',' << num(r, "constant") << ',' << str(r, "witness_label") << ','
         << str(r, "witness_hash") << ',' << (r.contains("divergent_probes") ? std::to_string(r["divergent_probes"].get<std::size_t>()) : "")
         << ',' << num(r, "half_identity_lhs") << ',' << num(r, "half_identity_rhs") << ',' << str(r, "error") << ','
         << digest << ',' << version_string() << '\n';
    }
    out.files.push_back(path);
  }
  out.summary = summary.str();
  out.exit_status = 0;
  return out;
}

}  // namespace lps
