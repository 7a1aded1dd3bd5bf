// Acceptance suite: one line per criterion, pinned tolerances, explicit
// runtime budgets. Criteria listed with --expect-fail are still evaluated and
// printed; the exit status is non-zero if any other criterion fails or if an
// expected failure unexpectedly passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lps/error.hpp"
#include "lps/functionals.hpp"
#include "lps/rbound.hpp"
#include "lps/verify.hpp"
#include "support.hpp"

using namespace lps;
using lps::testing::random_bundle;
using lps::testing::random_field;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double max_rel(const Field& a, const Field& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

/// Bundles with at most ~40 vertices for brute-force sign enumeration.
OperatorBundle small_bundle(Rng& rng) {
  switch (rng.below(5)) {
    case 0: {
      const std::size_t s = 3 + rng.below(4);
      const auto g = build_grid({s, s}, 1.0 / static_cast<double>(s - 1), rng.uniform() < 0.5);
      return attach_potential(g, lps::testing::random_potential(g, rng, 4.0));
    }
    case 1: {
      const auto g = build_radial_graph(3, rng.uniform(1.0, 3.0), 5 + rng.below(35));
      return attach_potential(g, [](const std::vector<double>& x) { return std::pow(x[0], -1.5); });
    }
    case 2: {
      const auto g = build_connected_sum(2, 4 + rng.below(1), 1);
      return attach_potential(g, Field::Zero(static_cast<Eigen::Index>(g.n_vertices())));
    }
    case 3: {
      const std::size_t s = 4 + rng.below(3);
      const auto g = build_grid({s, s}, 0.25, true);
      return attach_divergence_form(g, CoefficientField::checkerboard(g, 1.0, 10.0));
    }
    default: {
      const auto g = build_path_graph(3 + rng.below(38), rng.uniform(0.05, 1.0));
      return attach_potential(g, lps::testing::random_potential(g, rng, 3.0));
    }
  }
}

// 1 ------------------------------------------------------------------------
Outcome integration_by_parts() {
  double worst = 0.0;
  std::size_t divergence = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    Rng rng(derive_seed(1001, i));
    const auto b = random_bundle(rng);
    if (b.form() == OperatorForm::Divergence) ++divergence;
    for (int k = 0; k < 20; ++k) {
      const Field f = random_field(b.dim(), rng);
      const double lhs = b.inner(b.apply(f), f);
      const double rhs = b.measure().dot(gradient_squared(b, f)) + b.measure().dot(potential_squared(b, f));
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
  }
  return {worst <= 1e-10, "max |<Lf,f> - |grad f|^2 - |sqrt(V) f|^2| / (1+|<Lf,f>|) = " + fmt(worst) +
                              " over 50 bundles x 20 f (" + std::to_string(divergence) + " divergence-form)"};
}

// 2 ------------------------------------------------------------------------
Outcome p2_identity() {
  std::vector<OperatorBundle> graphs;
  graphs.push_back(unit_path_bundle(32));
  {
    const auto g = build_grid({9, 9}, 0.125, true);
    Rng rng(5);
    graphs.push_back(attach_potential(g, lps::testing::random_potential(g, rng, 10.0)));
  }
  {
    const auto g = build_radial_graph(3, 2.0, 60);
    graphs.push_back(attach_potential(g, [](const std::vector<double>& x) { return std::pow(x[0], -1.5); }));
  }
  {
    const auto g = build_connected_sum(2, 8, 2);
    graphs.push_back(attach_potential(g, Field::Zero(static_cast<Eigen::Index>(g.n_vertices()))));
  }
  {
    const auto g = build_grid({10, 10}, 1.0 / 9.0, true);
    graphs.push_back(attach_divergence_form(g, CoefficientField::checkerboard(g, 1.0, 10.0)));
  }
  const auto spec = FunctionalSpec::of(FunctionalKind::H, Gamma::Both, ChannelCombination::L2);
  double wq = 0.0, wg = 0.0, wqg = 0.0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& b = graphs[gi];
    const auto dec = decompose(b);
    Rng rng(derive_seed(2002, gi));
    for (int k = 0; k < 20; ++k) {
      const Field f = random_field(b.dim(), rng);
      const Field fp = dec.project_off_kernel(f);
      const double closed = 0.5 * b.inner(fp, fp);
      const Field q = lps_quadrature(b, dec, spec, {f}).value;
      const Field g = lps_exact_gram(b, dec, spec, {f}).value;
      const double iq = b.inner(q, q), ig = b.inner(g, g);
      wq = std::max(wq, rel(iq, closed));
      wg = std::max(wg, rel(ig, closed));
      wqg = std::max(wqg, rel(iq, ig));
    }
  }
  return {std::max({wq, wg, wqg}) <= 1e-6, "max rel error: quadrature vs 1/2|f_perp|^2 " + fmt(wq) + ", Gram vs closed form " +
                                               fmt(wg) + ", quadrature vs Gram " + fmt(wqg) + " (5 graphs x 20 f)"};
}

// 3 ------------------------------------------------------------------------
Outcome quadrature_oracle() {
  std::vector<FunctionalSpec> specs;
  for (auto kind : {FunctionalKind::H, FunctionalKind::HLoc, FunctionalKind::HInf, FunctionalKind::Q}) {
    for (auto gamma : {Gamma::Gradient, Gamma::Potential, Gamma::Both}) specs.push_back(FunctionalSpec::of(kind, gamma));
  }
  auto g = FunctionalSpec::of(FunctionalKind::G, Gamma::Both);
  g.multipliers = {MultiplierFunction::exp_decay(), MultiplierFunction::z_exp()};
  specs.push_back(g);
  auto hf = FunctionalSpec::of(FunctionalKind::HF, Gamma::Both);
  hf.multipliers = {MultiplierFunction::resolvent_power(1.0), MultiplierFunction::bump().dilated(0.05)};
  hf.outer = MultiplierFunction::z_exp();
  specs.push_back(hf);
  auto hfe = FunctionalSpec::of(FunctionalKind::HF, Gamma::Gradient);
  hfe.outer = MultiplierFunction::exp_decay();
  specs.push_back(hfe);

  double worst_default = 0.0, worst_fine = 0.0;
  std::size_t cases = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    Rng rng(derive_seed(3003, i));
    OperatorBundle b = small_bundle(rng);
    if (b.dim() > 60) continue;
    const auto dec = decompose(b);
    for (const auto& spec : specs) {
      for (int k = 0; k < 3; ++k) {
        std::vector<Field> fs;
        for (std::size_t t = 0; t < spec.n_terms(); ++t) fs.push_back(random_field(b.dim(), rng));
        const Field exact = lps_exact_gram(b, dec, spec, fs).value;
        if (exact.norm() == 0.0) continue;
        const Field q = lps_quadrature(b, dec, spec, fs).value;
        const Field qf = lps_quadrature(b, dec, spec, fs, TimeGrid::for_spec(dec, spec, 800)).value;
        worst_default = std::max(worst_default, max_rel(q, exact));
        worst_fine = std::max(worst_fine, max_rel(qf, exact));
        ++cases;
      }
    }
  }
  return {worst_default <= 1e-4 && worst_fine <= 1e-6,
          "max rel deviation " + fmt(worst_default) + " (400 nodes), " + fmt(worst_fine) + " (800 nodes) over " +
              std::to_string(cases) + " cases"};
}

// 4 ------------------------------------------------------------------------
Outcome kahane_corridor() {
  const std::vector<OperatorFamily> families{OperatorFamily::heat_gradient(), OperatorFamily::resolvent(1.0),
                                             OperatorFamily::local(), OperatorFamily::infinity()};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    Rng rng(derive_seed(4004, i));
    const auto b = small_bundle(rng);
    const auto dec = decompose(b);
    const double p = std::vector<double>{1.5, 2.0, 3.0}[rng.below(3)];
    const auto& fam = families[rng.below(families.size())];
    const std::size_t k = 1 + rng.below(6);
    std::vector<double> ts;
    std::vector<Field> fs;
    for (std::size_t j = 0; j < k; ++j) {
      double t = std::exp(rng.uniform(-6.0, 2.0));
      if (!fam.contains(t)) t = fam.domain.first > 0.0 ? fam.domain.first + t : std::min(t, fam.domain.second);
      ts.push_back(t);
      fs.push_back(random_field(b.dim(), rng));
    }
    const double e = rbound_ratio_expectation_exact(b, dec, fam, p, ts, fs, 1);
    const double s = rbound_ratio_square(b, dec, fam, p, ts, fs).empirical_constant;
    if (s <= 0.0 && e <= 0.0) continue;
    const double r = e / s;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ++used;
  }
  return {used == 200 && lo >= 0.25 && hi <= 4.0,
          "expectation/square ratio in [" + fmt(lo) + ", " + fmt(hi) + "] over " + std::to_string(used) + " inputs"};
}

// 5 ------------------------------------------------------------------------
Outcome uniform_bound() {
  const std::vector<std::size_t> sides{8, 12, 16};
  const auto r = check_uniform_bound(sides, 2.0, 24, 7);
  const double sharp = 1.0 / std::sqrt(2.0 * std::exp(1.0));
  double worst = 0.0;
  std::string vals;
  for (std::size_t s : sides) {
    const double sup = r.value("sup[" + std::to_string(s) + "]");
    worst = std::max(worst, std::isnan(sup) ? 1.0 : std::abs(sup - sharp));
    vals += (vals.empty() ? "" : ", ") + fmt(sup);
  }
  return {worst <= 1e-3 && r.verdict() == Verdict::Pass,
          "sup_t ||sqrt(t) grad e^{-tL}||_{2->2} = " + vals + " vs (2e)^{-1/2} = " + fmt(sharp) + ", max dev " + fmt(worst)};
}

// 6 ------------------------------------------------------------------------
Outcome lps_stability() {
  const auto r = check_lps_stability({16, 32, 64}, 1.5, 24, 7);
  const double hs = r.value("H_spread"), rs = r.value("rbound_spread");
  return {hs <= 0.5 && rs <= 0.5, "p=1.5 spread across sizes 16/32/64: H " + fmt(hs) + ", R-bound " + fmt(rs)};
}

// 7 ------------------------------------------------------------------------
Outcome lower_bounds() {
  const std::vector<std::size_t> sizes{16, 32, 64};
  bool ok = true;
  std::ostringstream os;
  for (double q : {2.0, 4.0}) {
    const auto lb = check_lower_bound_q(sizes, q, 24, 7);
    const auto qq = check_Q_lower(sizes, q, 24, 7);
    double lb_min = 1e300, q_min = 1e300;
    for (std::size_t n : sizes) {
      lb_min = std::min(lb_min, lb.value("min_ratio[" + std::to_string(n) + "]"));
      q_min = std::min(q_min, qq.value("min_ratio[" + std::to_string(n) + "]"));
      if (q == 2.0) ok = ok && lb.value("max_deviation_from_half[" + std::to_string(n) + "]") <= 1e-6;
    }
    const double lb_spread = lb.value("spread_across_sizes"), q_spread = qq.value("spread_across_sizes");
    ok = ok && lb_min >= 1e-3 && q_min >= 1e-3 && lb_spread <= 0.5 && q_spread <= 0.5;
    os << "q=" << q << ": lower-bound min " << fmt(lb_min) << " spread " << fmt(lb_spread) << ", Q min " << fmt(q_min)
       << " spread " << fmt(q_spread) << "; ";
  }
  os << "q=2 ratio 1/2 to 1e-6";
  return {ok, os.str()};
}

// 8 ------------------------------------------------------------------------
Outcome shen() {
  const ShenOptions o;
  const auto r = check_shen_counterexample(o);
  bool ok = true;
  std::ostringstream os;
  double prev_res = std::numeric_limits<double>::infinity();
  for (std::size_t m : o.refinements) {
    const double res = r.value("residual_annulus[" + std::to_string(m) + "]");
    ok = ok && res < prev_res;
    prev_res = res;
  }
  double min_growth = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < o.refinements.size(); ++i)
    min_growth = std::min(min_growth, r.value("grad_u_growth[" + std::to_string(o.refinements[i]) + "]"));
  const double us = r.value("u_spread"), gs = r.value("g_spread");
  ok = ok && min_growth >= 0.15 && us <= 0.10 && gs <= 0.10;
  os << "p0=" << fmt(r.value("p0")) << ", residual decreasing: " << (prev_res < 1e300 ? "checked" : "n/a")
     << ", min |grad u|_p0 growth " << fmt(min_growth) << " (need 0.15), |u| spread " << fmt(us) << ", |g| spread "
     << fmt(gs);
  return {ok, os.str()};
}

// 9 ------------------------------------------------------------------------
Outcome connected_sum() {
  const ConnectedSumOptions o;
  const auto r = check_connected_sum_growth(o, 7);
  double min_growth = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < o.sizes.size(); ++i)
    min_growth = std::min(min_growth, r.value("growth[" + std::to_string(o.sizes[i]) + "]"));
  const double cs = r.value("control_spread"), ss = r.value("single_sheet_spread");
  return {min_growth >= 0.10 && cs <= 0.30 && ss <= 0.30,
          "p=4 min growth per doubling " + fmt(min_growth) + " (need 0.10), p=1.5 control spread " + fmt(cs) +
              ", single sheet spread " + fmt(ss) + " (need <= 0.30)"};
}

// 10 -----------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "lps_acceptance_determinism";
  std::filesystem::remove_all(base);
  const auto opts = SuiteOptions::named("default", 7);
  write_suite_reports(base / "a", opts, run_suite(opts));
  write_suite_reports(base / "b", opts, run_suite(opts));
  bool same = true;
  for (const char* f : {"suite.csv", "suite.json"}) {
    const std::string a = slurp(base / "a" / f), b = slurp(base / "b" / f);
    same = same && !a.empty() && a == b;
  }
  std::filesystem::remove_all(base);
  return {same, std::string("default suite run twice with seed 7: suite.csv and suite.json ") +
                    (same ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> expect_fail, only;
  app.add_option("--expect-fail", expect_fail, "criteria documented as unattainable")->delimiter(',');
  app.add_option("--only", only, "run a subset")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());

  const std::vector<Criterion> criteria{
      {1, "exact integration by parts", 10, integration_by_parts},
      {2, "p=2 LPS identity", 30, p2_identity},
      {3, "quadrature / Gram oracle agreement", 120, quadrature_oracle},
      {4, "Kahane corridor", 120, kahane_corridor},
      {5, "uniform bound at p=2", 60, uniform_bound},
      {6, "stability at p=1.5", 180, lps_stability},
      {7, "lower bounds", 120, lower_bounds},
      {8, "Shen counterexample growth", 60, shen},
      {9, "connected-sum growth", 300, connected_sum},
      {10, "determinism of the default suite", 600, determinism},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; runtime " + fmt(secs) + " s over budget " + fmt(c.budget_seconds) + " s";
    }
    const bool is_expected = expected.count(c.id) > 0;
    std::string tag = o.pass ? "[PASS]" : "[FAIL]";
    std::string suffix;
    if (is_expected && !o.pass) suffix = " (expected, see decisions ledger)";
    if (is_expected && o.pass) suffix = " (listed as expected failure but passed)";
    if (o.pass == is_expected) ++unexpected;
    std::printf("%s criterion %d: %s -- %s [%.1f s]%s\n", tag.c_str(), c.id, c.title.c_str(), o.detail.c_str(), secs,
                suffix.c_str());
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
