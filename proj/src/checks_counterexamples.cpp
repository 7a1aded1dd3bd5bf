#include <algorithm>
#include <cmath>
#include <sstream>

#include "lps/error.hpp"
#include "lps/graph.hpp"
#include "lps/rbound.hpp"
#include "lps/verify.hpp"

namespace lps {

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string key(const std::string& base, std::size_t n) { return base + "[" + std::to_string(n) + "]"; }

// C^1 cubic: 1 on r <= 1, 0 on r >= 2.
double cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double s = r - 1.0;
  return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

}  // namespace

double shen_series(double r, int n_dim, double mu) {
  require(mu > 0.0 && mu < 2.0, ErrorCode::InvalidArgument, "series exponent mu must lie in (0, 2)");
  require(r >= 0.0, ErrorCode::InvalidArgument, "radius must be non-negative");
  const double nu = static_cast<double>(n_dim - 2) / mu;
  const double x = std::pow(r, mu) / (mu * mu);
  double term = 1.0 / std::tgamma(nu + 1.0);
  double sum = term;
  for (int m = 0; m < 200; ++m) {
    const double ratio = x / ((m + 1.0) * (m + 1.0 + nu));
    term *= ratio;
    sum += term;
    // Successive ratios decrease, so the tail is below a geometric series.
    const double next = x / ((m + 2.0) * (m + 2.0 + nu));
    if (next < 0.5 && term * next / (1.0 - next) < 1e-12 * sum) return sum;
  }
  fail(ErrorCode::NumericFailure, "series for v did not converge within 200 terms at r = " + std::to_string(r));
}

CheckResult check_shen_counterexample(const ShenOptions& o) {
  const double n = static_cast<double>(o.n_dim);
  require(o.q0 > n / 2.0, ErrorCode::InvalidArgument, "q0 must exceed n/2");
  require(o.q0 < n, ErrorCode::InvalidArgument, "q0 must be below n so that p0 is finite");
  require(o.refinements.size() >= 2, ErrorCode::InvalidArgument, "need at least two refinements");
  const double mu = 2.0 - n / o.q0;
  const double p0 = 1.0 / (1.0 / o.q0 - 1.0 / n);

  CheckResult r = CheckResult::qualitative("shen_counterexample", o.growth_threshold);
  std::ostringstream in;
  in << "shen;n=" << o.n_dim << ";q0=" << o.q0 << ";m=" << join(o.refinements) << ";r_max=" << o.r_max
     << ";growth=" << o.growth_threshold << ";flat=" << o.flat_threshold;
  r.set_inputs(in.str());
  r.measure("mu", mu);
  r.measure("p0", p0);

  std::vector<double> grad_norm, u_norm, g_norm, grad_max, residual;
  for (std::size_t m : o.refinements) {
    const WeightedGraph graph = build_radial_graph(o.n_dim, o.r_max, m);
    const OperatorBundle b =
        attach_potential(graph, [&](const std::vector<double>& x) { return std::pow(x[0], -n / o.q0); });
    const auto N = static_cast<Eigen::Index>(b.dim());
    Field v(N), phi(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double rad = b.radius(static_cast<std::size_t>(i));
      v[i] = shen_series(rad, o.n_dim, mu);
      phi[i] = cutoff(rad);
    }
    // Delta_h v + V v on an annulus away from both ends of the chain.
    const Field res = b.apply(v);
    double res_max = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double rad = b.radius(static_cast<std::size_t>(i));
      if (rad >= 0.25 && rad <= o.r_max - 0.25) res_max = std::max(res_max, std::abs(res[i]));
    }
    const Field u = phi.cwiseProduct(v);
    const Field lap_phi = b.apply(phi) - b.potential().cwiseProduct(phi);
    const Field g = v.cwiseProduct(lap_phi) - 2.0 * gradient_dot(b, phi, v);
    const Field grad_u = gradient_field(b, u);

    residual.push_back(res_max);
    grad_norm.push_back(lp_norm(b.measure(), grad_u, p0));
    u_norm.push_back(lp_norm(b.measure(), u, p0));
    g_norm.push_back(lp_norm(b.measure(), g, p0));
    grad_max.push_back(grad_u.maxCoeff());
    r.measure(key("residual_annulus", m), res_max);
    r.measure(key("grad_u_norm", m), grad_norm.back());
    r.measure(key("u_norm", m), u_norm.back());
    r.measure(key("g_norm", m), g_norm.back());
    r.measure(key("grad_u_max", m), grad_max.back());
  }
  for (std::size_t i = 1; i < o.refinements.size(); ++i) {
    const double growth = grad_norm[i] / grad_norm[i - 1] - 1.0;
    r.measure(key("grad_u_growth", o.refinements[i]), growth);
    r.expect(residual[i] < residual[i - 1], "harmonicity residual did not decrease at m=" + std::to_string(o.refinements[i]));
    r.expect(grad_max[i] > grad_max[i - 1], "max |grad u| did not increase at m=" + std::to_string(o.refinements[i]));
    r.expect(growth >= o.growth_threshold, "||grad u||_p0 grew by less than the threshold at m=" + std::to_string(o.refinements[i]));
  }
  r.measure("u_spread", relative_spread(u_norm));
  r.measure("g_spread", relative_spread(g_norm));
  r.expect(relative_spread(u_norm) <= o.flat_threshold, "||u||_p0 is not flat across refinements");
  r.expect(relative_spread(g_norm) <= o.flat_threshold, "||g||_p0 is not flat across refinements");
  r.note("growth thresholds are harness policy, not constants from the source result");
  return r;
}

CheckResult check_connected_sum_growth(const ConnectedSumOptions& o, std::uint64_t seed) {
  require(o.p > static_cast<double>(o.n_dim), ErrorCode::InvalidArgument, "growth check needs p > n_dim");
  require(o.sizes.size() >= 2, ErrorCode::InvalidArgument, "need at least two sizes");
  CheckResult r = CheckResult::qualitative("connected_sum_growth", o.growth_threshold);
  std::ostringstream in;
  in << "connected_sum;n=" << o.n_dim << ";p=" << o.p << ";control_p=" << o.control_p << ";sizes=" << join(o.sizes)
     << ";neck=" << o.neck << ";budget=" << o.budget << ";seed=" << seed << ";growth=" << o.growth_threshold
     << ";flat=" << o.flat_threshold;
  r.set_inputs(in.str());
  const FunctionalSpec spec = FunctionalSpec::of(FunctionalKind::HInf, Gamma::Gradient);
  std::vector<double> glued, control, sheet;
  for (std::size_t s : o.sizes) {
    const WeightedGraph cs = build_connected_sum(o.n_dim, s, o.neck);
    const OperatorBundle b = attach_potential(cs, Field::Zero(static_cast<Eigen::Index>(cs.n_vertices())));
    const SpectralDecomposition dec = decompose(b);
    glued.push_back(estimate_functional_norm(b, dec, spec, o.p, o.budget, seed).constant);
    control.push_back(estimate_functional_norm(b, dec, spec, o.control_p, o.budget, seed).constant);

    std::vector<std::size_t> dims(static_cast<std::size_t>(o.n_dim), s);
    const WeightedGraph flat = build_grid(dims, 1.0, false);
    const OperatorBundle fb = attach_potential(flat, Field::Zero(static_cast<Eigen::Index>(flat.n_vertices())));
    const SpectralDecomposition fdec = decompose(fb);
    sheet.push_back(estimate_functional_norm(fb, fdec, spec, o.p, o.budget, seed).constant);

    r.measure(key("hinf_constant", s), glued.back());
    r.measure(key("hinf_constant_control_p", s), control.back());
    r.measure(key("hinf_constant_single_sheet", s), sheet.back());
    r.measure(key("vertices", s), static_cast<double>(b.dim()));
  }
  for (std::size_t i = 1; i < glued.size(); ++i) {
    const double growth = glued[i] / glued[i - 1] - 1.0;
    r.measure(key("growth", o.sizes[i]), growth);
    r.expect(growth >= o.growth_threshold, "H_inf constant grew by less than the threshold at size " + std::to_string(o.sizes[i]));
  }
  r.measure("control_spread", relative_spread(control));
  r.measure("single_sheet_spread", relative_spread(sheet));
  r.expect(relative_spread(control) <= o.flat_threshold, "control exponent run is not flat");
  r.expect(relative_spread(sheet) <= o.flat_threshold, "single-sheet run is not flat");
  r.note("growth thresholds are harness policy; the source result is asymptotic");
  return r;
}

CheckResult check_equivalence_study(double p, std::size_t budget, std::uint64_t seed) {
  CheckResult r = CheckResult::qualitative("equivalence_study", 0.0);
  std::ostringstream in;
  in << "equivalence;p=" << p << ";budget=" << budget << ";seed=" << seed;
  r.set_inputs(in.str());
  struct Item {
    std::string name;
    OperatorBundle bundle;
  };
  std::vector<Item> battery;
  battery.push_back({"path16", unit_path_bundle(16)});
  battery.push_back({"path32", unit_path_bundle(32)});
  {
    const WeightedGraph g = build_grid({8, 8}, 1.0 / 7.0, true);
    battery.push_back({"grid8-dirichlet", attach_potential(g, Field::Zero(static_cast<Eigen::Index>(g.n_vertices())))});
    battery.push_back({"grid8-checkerboard", attach_divergence_form(g, CoefficientField::checkerboard(g, 1.0, 4.0))});
  }
  {
    const WeightedGraph g = build_radial_graph(3, 2.5, 60);
    battery.push_back({"radial3-V", attach_potential(g, [](const std::vector<double>& x) { return std::pow(x[0], -1.5); })});
  }
  for (std::size_t s : {std::size_t{8}, std::size_t{12}}) {
    const WeightedGraph g = build_connected_sum(2, s, 2);
    battery.push_back({"connected-sum" + std::to_string(s),
                       attach_potential(g, Field::Zero(static_cast<Eigen::Index>(g.n_vertices())))});
  }
  const FunctionalSpec spec = FunctionalSpec::of(FunctionalKind::H, Gamma::Both, ChannelCombination::L2);
  std::vector<double> hs, rs;
  for (const auto& it : battery) {
    const SpectralDecomposition dec = decompose(it.bundle);
    const double h = estimate_functional_norm(it.bundle, dec, spec, p, budget, seed).constant;
    const double rb =
        estimate_rbound_constant(it.bundle, dec, OperatorFamily::heat_gradient(), p, budget, 4, seed).empirical_constant;
    r.measure("H_constant[" + it.name + "]", h);
    r.measure("rbound_constant[" + it.name + "]", rb);
    hs.push_back(h);
    rs.push_back(rb);
  }
  r.measure("kendall_tau", kendall_tau(hs, rs));
  r.observe_only();
  r.note("association between empirical constants is recorded; no implication between the two properties is claimed");
  return r;
}

CheckResult check_reverse_holder(std::uint64_t seed) {
  CheckResult r = CheckResult::qualitative("reverse_holder", 0.0);
  std::ostringstream in;
  in << "reverse_holder;seed=" << seed;
  r.set_inputs(in.str());
  const WeightedGraph g = build_grid({17, 17}, 1.0 / 16.0, false);
  const std::vector<double> radii{0.1, 0.25, 0.5, 1.0};
  Field poly(static_cast<Eigen::Index>(g.n_vertices()));
  Field spike = Field::Zero(static_cast<Eigen::Index>(g.n_vertices()));
  for (std::size_t v = 0; v < g.n_vertices(); ++v) {
    const auto& x = g.positions()[v];
    poly[static_cast<Eigen::Index>(v)] = x[0] * x[0] + x[1] * x[1];
  }
  spike[static_cast<Eigen::Index>(g.n_vertices() / 2)] = 1.0;
  for (double q : {2.0, 4.0}) {
    const auto e1 = check_reverse_holder(g, poly, q, radii);
    const auto e2 = check_reverse_holder(g, spike, q, radii);
    const std::string qs = q == 2.0 ? "2" : "4";
    r.measure("polynomial_constant[q=" + qs + "]", e1.constant);
    r.measure("spike_constant[q=" + qs + "]", e2.constant);
    r.expect(!e1.infinite && std::isfinite(e1.constant), "polynomial potential has no finite reverse Holder constant");
  }
  r.note("a point spike has a large constant growing with ball size; polynomial potentials stay bounded");
  return r;
}

}  // namespace lps
