// lpslab: command-line driver for the LPS harness.
//
// Exit status: 0 all pass/observe, 1 violation or numeric failure,
// 2 usage or validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "lps/config.hpp"
#include "lps/error.hpp"
#include "lps/functionals.hpp"
#include "lps/rbound.hpp"
#include "lps/riesz.hpp"
#include "lps/verify.hpp"

namespace {

struct GraphFlags {
  lps::GraphSpec graph;
  lps::PotentialSpec potential;
  lps::OperatorSpec op;
};

void add_graph_flags(CLI::App* app, GraphFlags& g) {
  app->add_option("--graph", g.graph.builder, "path | grid | radial | connected-sum | file")
      ->check(CLI::IsMember({"path", "grid", "radial", "connected-sum", "file"}));
  app->add_option("--size", g.graph.size, "path length, grid side, radial m or connected-sum side");
  app->add_option("--spacing", g.graph.spacing, "lattice spacing (default 1/size)");
  app->add_flag("--dirichlet", g.graph.dirichlet, "flag the grid boundary layer as Dirichlet");
  app->add_option("--n-dim", g.graph.n_dim, "dimension for radial graphs and connected sums");
  app->add_option("--r-max", g.graph.r_max, "outer radius of radial graphs");
  app->add_option("--neck", g.graph.neck, "neck width of connected sums");
  app->add_option("--graph-file", g.graph.file, "lps-graph JSON file (with --graph file)");
  app->add_option("--potential", g.potential.kind, "zero | constant | power")
      ->check(CLI::IsMember({"zero", "constant", "power"}));
  app->add_option("--potential-value", g.potential.value, "constant value or prefactor");
  app->add_option("--potential-exponent", g.potential.exponent, "exponent for power potentials");
  app->add_option("--form", g.op.form, "schroedinger | divergence")
      ->check(CLI::IsMember({"schroedinger", "divergence"}));
  app->add_option("--coefficients", g.op.coefficients, "scalar | checkerboard (divergence form)");
}

std::string hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) lps::fail(lps::ErrorCode::InvalidArgument, "cannot write " + out);
  os << text;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      lps::fail(lps::ErrorCode::Validation, "--sizes: '" + item + "' is not a size");
    }
  }
  if (out.empty()) lps::fail(lps::ErrorCode::Validation, "--sizes: empty list");
  return out;
}

int exit_for(const lps::Error& e) {
  switch (e.code()) {
    case lps::ErrorCode::Validation:
    case lps::ErrorCode::InvalidArgument:
    case lps::ErrorCode::Unsupported:
    case lps::ErrorCode::HypothesisViolation: return 2;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Littlewood-Paley-Stein functionals, R-bounds and Riesz transforms on weighted graphs"};
  app.set_version_flag("--version", lps::version_string());
  app.require_subcommand(1);

  // functional ---------------------------------------------------------------
  GraphFlags fg;
  std::string f_kind = "H", f_gamma = "both", f_combine = "sum", f_format = "csv", f_out, f_field;
  double f_p = 2.0;
  std::size_t f_budget = 24, f_nodes = 400;
  std::uint64_t f_seed = 0;
  auto* fun = app.add_subcommand("functional", "estimate ||spec(f)||_p / ||f||_p over the probe battery");
  add_graph_flags(fun, fg);
  fun->add_option("--kind", f_kind, "H | H_F | G | H_loc | H_inf | Q");
  fun->add_option("--gamma", f_gamma, "gradient | potential | both");
  fun->add_option("--combine", f_combine, "sum | l2")->check(CLI::IsMember({"sum", "l2"}));
  fun->add_option("--p", f_p, "exponent in (1, inf)");
  fun->add_option("--budget", f_budget, "probe count");
  fun->add_option("--time-nodes", f_nodes, "quadrature nodes in t");
  fun->add_option("--seed", f_seed, "master seed")->required();
  fun->add_option("--format", f_format, "csv | structured")->check(CLI::IsMember({"csv", "structured"}));
  fun->add_option("--out", f_out, "report file (default stdout)");
  fun->add_option("--field-csv", f_field, "also write the functional of the witness per vertex");

  // rbound -------------------------------------------------------------------
  GraphFlags rg;
  std::string r_family = "heat-gradient", r_gamma = "both", r_sizes, r_format = "csv", r_out;
  double r_p = 2.0;
  std::size_t r_budget = 24, r_kmax = 4;
  std::uint64_t r_seed = 0;
  auto* rb = app.add_subcommand("rbound", "empirical R-bound constants (square form) across sizes");
  add_graph_flags(rb, rg);
  rb->add_option("--family", r_family, "heat-gradient | resolvent | local | infinity | identity");
  rb->add_option("--gamma", r_gamma, "gradient | potential | both");
  rb->add_option("--p", r_p, "exponent in (1, inf)");
  rb->add_option("--sizes", r_sizes, "comma-separated sizes (default: --size)");
  rb->add_option("--budget", r_budget, "trial count");
  rb->add_option("--k-max", r_kmax, "largest family size per trial");
  rb->add_option("--seed", r_seed, "master seed")->required();
  rb->add_option("--format", r_format, "csv | structured")->check(CLI::IsMember({"csv", "structured"}));
  rb->add_option("--out", r_out, "report file (default stdout)");

  // riesz --------------------------------------------------------------------
  GraphFlags zg;
  std::string z_kind = "full", z_gamma = "both", z_format = "csv", z_out;
  double z_p = 2.0;
  std::size_t z_budget = 24;
  std::uint64_t z_seed = 0;
  auto* rz = app.add_subcommand("riesz", "empirical Riesz transform norms and decomposition checks");
  add_graph_flags(rz, zg);
  rz->add_option("--kind", z_kind, "full | local | infinity");
  rz->add_option("--gamma", z_gamma, "gradient | potential | both");
  rz->add_option("--p", z_p, "exponent in (1, inf)");
  rz->add_option("--budget", z_budget, "probe count");
  rz->add_option("--seed", z_seed, "master seed")->required();
  rz->add_option("--format", z_format, "csv | structured")->check(CLI::IsMember({"csv", "structured"}));
  rz->add_option("--out", z_out, "report file (default stdout)");

  // verify -------------------------------------------------------------------
  std::string v_suite = "default", v_out = "lps-verify";
  std::uint64_t v_seed = 0;
  unsigned v_jobs = 0;
  auto* ver = app.add_subcommand("verify", "run the named check suite and write suite.csv / suite.json");
  ver->add_option("--suite", v_suite, "default | quick");
  ver->add_option("--seed", v_seed, "master seed")->required();
  ver->add_option("--out", v_out, "report directory");
  ver->add_option("--jobs", v_jobs, "worker threads (0: all cores)");

  // scenario -----------------------------------------------------------------
  std::string s_config;
  auto* sc = app.add_subcommand("scenario", "run an experiment config file");
  sc->add_option("--config", s_config, "JSON experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fun->parsed()) {
      const lps::OperatorBundle b = lps::build_bundle(fg.graph, fg.potential, fg.op);
      const lps::SpectralDecomposition dec = lps::decompose(b);
      lps::FunctionalSpec spec = lps::FunctionalSpec::of(
          lps::functional_kind_from_string(f_kind), lps::gamma_from_string(f_gamma),
          f_combine == "l2" ? lps::ChannelCombination::L2 : lps::ChannelCombination::Sum);
      if (spec.kind == lps::FunctionalKind::G) spec.multipliers = {lps::MultiplierFunction::exp_decay()};
      const auto est = lps::estimate_functional_norm(b, dec, spec, f_p, f_budget, f_seed, {f_nodes});
      if (f_format == "structured") {
        nlohmann::json j;
        j["version"] = lps::version_string();
        j["functional"] = spec.describe();
        j["graph"] = fg.graph.builder;
        j["vertices"] = b.dim();
        j["kernel_dim"] = dec.kernel_dim;
        j["p"] = f_p;
        j["constant"] = est.constant;
        j["witness_label"] = est.witness_label;
        j["witness_hash"] = hex(est.witness_hash);
        j["seed"] = est.seed;
        j["budget"] = est.budget;
        j["divergent_probes"] = est.divergent_probes;
        j["lower_bound_only"] = true;
        emit(f_out, j.dump(2) + "\n");
      } else {
        emit(f_out, "functional,graph,vertices,p,seed,budget,constant,witness_label,witness_hash,divergent_probes,version\n" +
                        spec.describe() + "," + fg.graph.builder + "," + std::to_string(b.dim()) + "," + num(f_p) + "," +
                        std::to_string(f_seed) + "," + std::to_string(f_budget) + "," + num(est.constant) + "," +
                        est.witness_label + "," + hex(est.witness_hash) + "," + std::to_string(est.divergent_probes) +
                        "," + lps::version_string() + "\n");
      }
      if (!f_field.empty()) {
        std::ofstream os(f_field);
        const std::vector<lps::Field> fl(spec.n_terms(), est.witness);
        lps::write_functional_csv(os, b, lps::lps_quadrature(b, dec, spec, fl).value);
      }
      return 0;
    }

    if (rb->parsed()) {
      const auto sizes = r_sizes.empty() ? std::vector<std::size_t>{rg.graph.size} : parse_sizes(r_sizes);
      const lps::OperatorFamily fam = lps::OperatorFamily::by_name(r_family, lps::gamma_from_string(r_gamma));
      nlohmann::json rows = nlohmann::json::array();
      std::string csv = "family,graph,size,vertices,p,seed,budget,k_max,empirical_constant,mean_ratio,version\n";
      for (std::size_t s : sizes) {
        lps::GraphSpec g = rg.graph;
        g.size = s;
        const lps::OperatorBundle b = lps::build_bundle(g, rg.potential, rg.op);
        const lps::SpectralDecomposition dec = lps::decompose(b);
        const auto est = lps::estimate_rbound_constant(b, dec, fam, r_p, r_budget, r_kmax, r_seed);
        nlohmann::json j = lps::to_json(est);
        j["size"] = s;
        j["vertices"] = b.dim();
        rows.push_back(j);
        csv += fam.label + "," + g.builder + "," + std::to_string(s) + "," + std::to_string(b.dim()) + "," + num(r_p) +
               "," + std::to_string(r_seed) + "," + std::to_string(r_budget) + "," + std::to_string(r_kmax) + "," +
               num(est.empirical_constant) + "," + num(est.mean_ratio) + "," + lps::version_string() + "\n";
      }
      if (r_format == "structured")
        emit(r_out, nlohmann::json{{"version", lps::version_string()}, {"estimates", rows}}.dump(2) + "\n");
      else
        emit(r_out, csv);
      return 0;
    }

    if (rz->parsed()) {
      const lps::OperatorBundle b = lps::build_bundle(zg.graph, zg.potential, zg.op);
      const lps::SpectralDecomposition dec = lps::decompose(b);
      const lps::Gamma gamma = lps::gamma_from_string(z_gamma);
      const auto rep = lps::estimate_riesz_norm(b, dec, lps::riesz_kind_from_string(z_kind), z_p, z_budget, z_seed, gamma);
      const auto chen = lps::chen_decomposition_check(b, dec, z_p, z_budget, z_seed);
      const auto mult = lps::multiplicative_inequality_check(b, dec, z_p, z_budget, z_seed, gamma);
      if (z_format == "structured") {
        nlohmann::json j;
        j["version"] = lps::version_string();
        j["kind"] = lps::to_string(rep.kind);
        j["gamma"] = lps::to_string(rep.gamma);
        j["p"] = z_p;
        j["seed"] = z_seed;
        j["budget"] = z_budget;
        j["norm"] = rep.norm;
        j["witness_label"] = rep.witness_label;
        j["witness_hash"] = hex(lps::field_hash(rep.witness));
        j["kernel_dim"] = rep.kernel_dim;
        if (rep.exact_bound_applies) j["within_exact_bound"] = rep.within_exact_bound;
        j["chen_max_violation"] = chen.max_violation;
        j["chen_phi_sup"] = chen.phi_sup;
        j["multiplicative_max_ratio"] = mult.max_ratio;
        emit(z_out, j.dump(2) + "\n");
      } else {
        emit(z_out, "kind,gamma,p,seed,budget,norm,witness_label,kernel_dim,within_exact_bound,chen_max_violation,"
                    "multiplicative_max_ratio,version\n" +
                        lps::to_string(rep.kind) + "," + lps::to_string(rep.gamma) + "," + num(z_p) + "," +
                        std::to_string(z_seed) + "," + std::to_string(z_budget) + "," + num(rep.norm) + "," +
                        rep.witness_label + "," + std::to_string(rep.kernel_dim) + "," +
                        (rep.exact_bound_applies ? (rep.within_exact_bound ? "true" : "false") : "n/a") + "," +
                        num(chen.max_violation) + "," + num(mult.max_ratio) + "," + lps::version_string() + "\n");
      }
      const bool violated = (rep.exact_bound_applies && !rep.within_exact_bound) || chen.max_violation > 1e-9;
      return violated ? 1 : 0;
    }

    if (ver->parsed()) {
      lps::SuiteOptions opts = lps::SuiteOptions::named(v_suite, v_seed);
      opts.jobs = v_jobs;
      const auto results = lps::run_suite(opts);
      lps::write_suite_reports(v_out, opts, results);
      for (const auto& r : results) {
        std::printf("%-22s %-11s %-9s %7.2fs  %s\n", r.id().c_str(), lps::to_string(r.statement()).c_str(),
                    lps::to_string(r.verdict()).c_str(), r.runtime_seconds, r.inputs_digest().c_str());
        for (const auto& f : r.failures()) std::printf("    - %s\n", f.c_str());
      }
      std::printf("reports written to %s\n", v_out.c_str());
      return lps::any_violation(results) ? 1 : 0;
    }

    if (sc->parsed()) {
      const lps::ExperimentConfig cfg = lps::load_config(s_config);
      const auto summary = lps::run(cfg);
      std::cout << summary.summary;
      for (const auto& f : summary.files) std::cout << "wrote " << f.string() << "\n";
      return summary.exit_status;
    }
  } catch (const lps::Error& e) {
    nlohmann::json j{{"error", std::string(lps::to_string(e.code()))}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return exit_for(e);
  }
  return 2;
}
