#include "doctest.h"

#include <cmath>
#include <sstream>

#include "lps/error.hpp"
#include "lps/functionals.hpp"
#include "lps/spectral.hpp"
#include "support.hpp"

using namespace lps;
using lps::testing::for_all_cases;
using lps::testing::random_bundle;
using lps::testing::random_field;

namespace {

OperatorBundle p3() {
  const auto g = build_path_graph(3, 1.0);
  return attach_potential(g, Field::Zero(3));
}

const Field kEigen1 = (Field(3) << 1, 0, -1).finished();

double rel(const Field& a, const Field& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("lp_norm") {
  Field mu(3), f(3);
  mu << 2, 1, 1;
  f << 1, 0, 0;
  CHECK(lp_norm(mu, f, 2.0) == doctest::Approx(std::sqrt(2.0)));
  for (double p : {1.5, 2.0, 3.7}) CHECK(lp_norm(mu, Field::Ones(3), p) == doctest::Approx(std::pow(4.0, 1.0 / p)));

  for_all_cases(11, 50, [](std::size_t, lps::Rng& rng) {
    const std::size_t n = 2 + rng.below(30);
    Field m(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = rng.uniform(0.1, 2.0);
    const Field g = random_field(n, rng);
    const double linf = g.cwiseAbs().maxCoeff();
    CHECK(lp_norm(m, g, 2.0) <= std::sqrt(lp_norm(m, g, 1.0) * linf) * (1 + 1e-12));
  });
}

TEST_CASE("sequence_rhs_norm") {
  Field mu = Field::Constant(4, 0.5);
  lps::Rng rng(1);
  const Field f = random_field(4, rng);
  CHECK(sequence_rhs_norm(mu, {f}, 3.0) == doctest::Approx(lp_norm(mu, f, 3.0)));
  CHECK(sequence_rhs_norm(mu, {f, f, f}, 3.0) == doctest::Approx(std::sqrt(3.0) * lp_norm(mu, f, 3.0)));
  Field a = Field::Zero(4), b = Field::Zero(4);
  a[0] = 2.0;
  b[3] = -1.5;
  const double expect = std::sqrt(std::pow(lp_norm(mu, a, 2.0), 2) + std::pow(lp_norm(mu, b, 2.0), 2));
  CHECK(sequence_rhs_norm(mu, {a, b}, 2.0) == doctest::Approx(expect));
}

TEST_CASE("H on the P3 eigenvector") {
  const auto b = p3();
  const auto dec = decompose(b);
  const auto spec = FunctionalSpec::of(FunctionalKind::H, Gamma::Gradient);
  const auto q = lps_quadrature(b, dec, spec, {kEigen1});
  CHECK(q.value[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(q.value[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(q.value[2] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::pow(lp_norm(b, q.value, 2.0), 2) == doctest::Approx(1.0).epsilon(1e-6));
  const auto g = lps_exact_gram(b, dec, spec, {kEigen1});
  CHECK(rel(q.value, g.value) < 1e-6);
  CHECK(g.value[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("trivial functionals") {
  const auto b = p3();
  const auto dec = decompose(b);
  lps::Rng rng(2);
  const Field f = random_field(3, rng);
  CHECK(lps_quadrature(b, dec, FunctionalSpec::of(FunctionalKind::H, Gamma::Potential), {f}).value.norm() == 0.0);
  CHECK(lps_exact_gram(b, dec, FunctionalSpec::of(FunctionalKind::HLoc), {Field::Ones(3)}).value.norm() < 1e-14);

  // V > 0 everywhere: no kernel, and the constant is not annihilated by sqrt(V)
  const auto g = build_path_graph(3, 1.0);
  const auto bv = attach_potential(g, Field::Ones(3));
  const auto decv = decompose(bv);
  CHECK(lps_quadrature(bv, decv, FunctionalSpec::of(FunctionalKind::H, Gamma::Both), {Field::Ones(3)}).value.minCoeff() > 0.0);

  // Kernel of a potential-free bundle is killed by the gradient but not by the
  // plain semigroup: the constant has zero H and Q(1) = |e^{-L} 1| = 1.
  const auto h1 = lps_quadrature(b, dec, FunctionalSpec::of(FunctionalKind::H), {Field::Ones(3)});
  CHECK(h1.value.norm() < 1e-12);
  CHECK(h1.kernel_projected);
  const auto q1 = lps_quadrature(b, dec, FunctionalSpec::of(FunctionalKind::Q), {Field::Ones(3)});
  CHECK((q1.value - Field::Ones(3)).norm() < 1e-12);
}

TEST_CASE("divergent kernel contributions are reported") {
  const auto b = p3();
  const auto dec = decompose(b);
  auto spec = FunctionalSpec::of(FunctionalKind::HF, Gamma::Gradient);
  spec.outer = MultiplierFunction::constant(1.0);
  try {
    lps_quadrature(b, dec, spec, {kEigen1});
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Divergence);
  }
}

TEST_CASE("property: quadrature against the Gram oracle") {
  for_all_cases(404, 12, [](std::size_t, lps::Rng& rng) {
    const auto b = random_bundle(rng, 60);
    if (b.dim() > 60 || b.dim() < 2) return;
    const auto dec = decompose(b);
    std::vector<FunctionalSpec> specs;
    for (auto kind : {FunctionalKind::H, FunctionalKind::HLoc, FunctionalKind::HInf, FunctionalKind::Q}) {
      specs.push_back(FunctionalSpec::of(kind, Gamma::Both));
    }
    auto g = FunctionalSpec::of(FunctionalKind::G, Gamma::Both);
    g.multipliers = {MultiplierFunction::exp_decay(), MultiplierFunction::z_exp()};
    specs.push_back(g);
    auto hf = FunctionalSpec::of(FunctionalKind::HF, Gamma::Gradient);
    hf.multipliers = {MultiplierFunction::resolvent_power(1.0)};
    hf.outer = MultiplierFunction::z_exp();
    specs.push_back(hf);
    for (const auto& spec : specs) {
      std::vector<Field> fs;
      for (std::size_t k = 0; k < spec.n_terms(); ++k) fs.push_back(random_field(b.dim(), rng));
      const auto exact = lps_exact_gram(b, dec, spec, fs);
      const auto quad = lps_quadrature(b, dec, spec, fs);
      const auto fine = lps_quadrature(b, dec, spec, fs, TimeGrid::for_spec(dec, spec, 800));
      INFO(spec.describe());
      CHECK(rel(quad.value, exact.value) <= 1e-4);
      CHECK(rel(fine.value, exact.value) <= 1e-6);
    }
  });
}

TEST_CASE("property: p = 2 identity, splitting, monotonicity, scaling") {
  for_all_cases(505, 15, [](std::size_t, lps::Rng& rng) {
    const auto b = random_bundle(rng, 150);
    const auto dec = decompose(b);
    const Field f = random_field(b.dim(), rng);
    const Field fp = dec.project_off_kernel(f);

    const auto both = FunctionalSpec::of(FunctionalKind::H, Gamma::Both, ChannelCombination::L2);
    const auto h = lps_quadrature(b, dec, both, {f});
    CHECK(std::pow(lp_norm(b, h.value, 2.0), 2) == doctest::Approx(0.5 * b.inner(fp, fp)).epsilon(1e-8));

    // Additivity of the t-integral: exact for the Gram oracle, up to the
    // quadrature error for the quadrature engine.
    const auto loc_spec = FunctionalSpec::of(FunctionalKind::HLoc, Gamma::Both, ChannelCombination::L2);
    const auto inf_spec = FunctionalSpec::of(FunctionalKind::HInf, Gamma::Both, ChannelCombination::L2);
    const Field gh = lps_exact_gram(b, dec, both, {f}).value.cwiseAbs2();
    const Field gsplit = lps_exact_gram(b, dec, loc_spec, {f}).value.cwiseAbs2() +
                         lps_exact_gram(b, dec, inf_spec, {f}).value.cwiseAbs2();
    CHECK((gsplit - gh).cwiseAbs().maxCoeff() <= 1e-9 * (1 + gh.maxCoeff()));

    const auto loc = lps_quadrature(b, dec, loc_spec, {f});
    const auto inf = lps_quadrature(b, dec, inf_spec, {f});
    const Field split = loc.value.cwiseAbs2() + inf.value.cwiseAbs2();
    CHECK((split - h.value.cwiseAbs2()).cwiseAbs().maxCoeff() <= 1e-6 * (1 + h.value.cwiseAbs2().maxCoeff()));
    CHECK((h.value - loc.value).minCoeff() >= -1e-12);
    CHECK((h.value - inf.value).minCoeff() >= -1e-12);

    const double c = rng.uniform(-3, 3);
    const auto hc = lps_quadrature(b, dec, both, {Field(c * f)});
    CHECK((hc.value - std::abs(c) * h.value).cwiseAbs().maxCoeff() <= 1e-12 * (1 + h.value.maxCoeff()));
  });
}

TEST_CASE("TimeGrid") {
  const auto dec = decompose(p3());
  const auto grid = TimeGrid::for_spec(dec, FunctionalSpec::of(FunctionalKind::H));
  CHECK(grid.size() % 2 == 1);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid.nodes[i] > grid.nodes[i - 1]);
  for (double w : grid.weights) CHECK(w > 0.0);
  const auto split = TimeGrid::for_spec(dec, FunctionalSpec::of(FunctionalKind::HInf));
  CHECK(split.nodes.front() >= 1.0);
  const auto plain = TimeGrid::log_simpson(1.0, std::exp(2.0), 101);
  double integral = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) integral += plain.weights[i] / plain.nodes[i];
  CHECK(integral == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("estimate_functional_norm") {
  const auto g = build_grid({6, 6}, 0.2, false);
  const auto b = attach_potential(g, Field::Zero(36));
  const auto dec = decompose(b);

  const auto q = estimate_functional_norm(b, dec, FunctionalSpec::of(FunctionalKind::Q), 2.5, 4, 1);
  CHECK(q.labels.front().find("constant") != std::string::npos);
  CHECK(q.ratios.front() == doctest::Approx(1.0).epsilon(1e-12));

  const auto gv = build_grid({6, 6}, 0.2, true);
  const auto bv = attach_potential(gv, Field::Constant(36, 2.0));
  const auto decv = decompose(bv);
  const auto h2 = estimate_functional_norm(bv, decv, FunctionalSpec::of(FunctionalKind::H, Gamma::Both, ChannelCombination::L2), 2.0, 16, 3);
  CHECK(h2.constant <= 1.0 / std::sqrt(2.0) + 1e-6);

  double prev = 0.0;
  for (std::size_t budget : {2u, 6u, 12u}) {
    const auto e = estimate_functional_norm(b, dec, FunctionalSpec::of(FunctionalKind::H), 3.0, budget, 7);
    CHECK(e.constant >= prev);
    prev = e.constant;
  }
  const auto a = estimate_functional_norm(b, dec, FunctionalSpec::of(FunctionalKind::H), 3.0, 8, 7);
  const auto a2 = estimate_functional_norm(b, dec, FunctionalSpec::of(FunctionalKind::H), 3.0, 8, 7);
  CHECK(a.constant == a2.constant);
  CHECK(a.witness_hash == a2.witness_hash);
  CHECK(a.witness_hash == field_hash(a.witness));
}

TEST_CASE("functional CSV layout") {
  const auto b = p3();
  std::ostringstream os;
  write_functional_csv(os, b, Field::Ones(3));
  const std::string s = os.str();
  CHECK(s.rfind("vertex,x0,value\n", 0) == 0);
  CHECK(s.find("\n2,") != std::string::npos);
}

TEST_CASE("kind names round trip") {
  for (auto k : {FunctionalKind::H, FunctionalKind::HF, FunctionalKind::G, FunctionalKind::HLoc, FunctionalKind::HInf, FunctionalKind::Q}) {
    CHECK(functional_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(functional_kind_from_string("nope"), Error);
}
