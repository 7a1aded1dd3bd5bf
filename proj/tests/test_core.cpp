#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "lps/bundle.hpp"
#include "lps/error.hpp"
#include "lps/graph.hpp"
#include "lps/serialize.hpp"
#include "lps/spectral.hpp"
#include "support.hpp"

using namespace lps;
using lps::testing::for_all_cases;
using lps::testing::random_bundle;
using lps::testing::random_field;

namespace {

Field zeros(const WeightedGraph& g) { return Field::Zero(static_cast<Eigen::Index>(g.n_vertices())); }

Eigen::VectorXd eigenvalues_of(const OperatorBundle& b) { return decompose(b).eigenvalues; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::NumericFailure;
}

}  // namespace

TEST_CASE("graph invariants are validated") {
  CHECK(code_of([] { WeightedGraph({1.0, 0.0}, {{0, 1, 1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { WeightedGraph({1.0, 1.0}, {{0, 1, -1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { WeightedGraph({1.0, 1.0}, {{0, 0, 1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { WeightedGraph({1.0, 1.0}, {{0, 1, 1.0}, {1, 0, 2.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { WeightedGraph({1.0, 1.0}, {{0, 2, 1.0}}); }) == ErrorCode::InvalidArgument);
  const WeightedGraph two({1.0, 1.0, 1.0, 1.0}, {{0, 1, 1.0}, {2, 3, 1.0}});
  CHECK(two.n_components() == 2);
}

TEST_CASE("build_path_graph") {
  const auto p3 = build_path_graph(3, 1.0);
  CHECK(p3.n_vertices() == 3);
  CHECK(p3.edges().size() == 2);
  const auto ev = eigenvalues_of(attach_potential(p3, zeros(p3)));
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(3.0).epsilon(1e-12));

  const auto p2 = build_path_graph(2, 1.0);
  const auto ev2 = eigenvalues_of(attach_potential(p2, zeros(p2)));
  CHECK(ev2[1] == doctest::Approx(2.0).epsilon(1e-12));

  const auto p4 = build_path_graph(4, 0.5);
  for (const auto& e : p4.edges()) CHECK(e.conductance == doctest::Approx(2.0));
  for (double m : p4.measure()) CHECK(m == doctest::Approx(0.5));
  const auto b4 = attach_potential(p4, zeros(p4));
  CHECK(std::abs(b4.quadratic_form(Field::Ones(4))) < 1e-14);

  CHECK(code_of([] { build_path_graph(1, 1.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_path_graph(3, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("build_grid") {
  const auto g = build_grid({8, 8}, 1.0, false);
  CHECK(g.n_vertices() == 64);
  CHECK(g.edges().size() == 112);

  const auto line = build_grid({3}, 1.0, true);
  const auto b = attach_potential(line, zeros(line));
  REQUIRE(b.dim() == 1);
  CHECK(b.apply(Field::Ones(1))[0] == doctest::Approx(2.0));

  const auto d = build_grid({16, 16}, 0.25, true);
  const auto dec = decompose(attach_potential(d, zeros(d)));
  CHECK(dec.kernel_dim == 0);
  CHECK(dec.eigenvalues[0] > 0.0);

  CHECK(code_of([] { build_grid({}, 1.0, false); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_grid({1, 4}, 1.0, false); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("build_radial_graph") {
  const auto g = build_radial_graph(3, 1.0, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double r = (i + 1) / 4.0;
    CHECK(g.measure()[i] / g.measure()[0] == doctest::Approx(r * r / (0.25 * 0.25)));
  }
  const auto g2 = build_radial_graph(2, 2.0, 10);
  // Riemann sum 0.04 * (1 + ... + 10) = 2.2: exactly at the 10% edge
  CHECK(g2.total_measure() == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(std::abs(g2.total_measure() - 2.0) / 2.0 <= 0.1 + 1e-12);

  const auto g3 = build_radial_graph(3, 1.0, 100);
  const auto b3 = attach_potential(g3, zeros(g3));
  Field f(100);
  for (std::size_t i = 0; i < 100; ++i) f[static_cast<Eigen::Index>(i)] = g3.radius(i);
  CHECK(std::abs(b3.quadratic_form(f) - 1.0 / 3.0) / (1.0 / 3.0) <= 0.02);

  CHECK(code_of([] { build_radial_graph(1, 1.0, 10); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_radial_graph(3, 1.0, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("build_connected_sum") {
  const auto g = build_connected_sum(2, 16, 2);
  CHECK(g.n_components() == 1);
  const auto dec = decompose(attach_potential(g, zeros(g)));
  CHECK(dec.kernel_dim == 1);

  const auto sheet = build_grid({16, 16}, 1.0, false);
  const auto sheet_dec = decompose(attach_potential(sheet, zeros(sheet)));
  CHECK(dec.eigenvalues[1] < sheet_dec.eigenvalues[1]);

  // 2 * (side^2 - neck^2) - neck
  CHECK(build_connected_sum(2, 8, 1).n_vertices() == 2 * (64 - 1) - 1);
  CHECK(build_connected_sum(2, 8, 2).n_vertices() == 2 * (64 - 4) - 2);
  CHECK(code_of([] { build_connected_sum(2, 7, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("attach_potential") {
  const auto p3 = build_path_graph(3, 1.0);
  const auto b0 = attach_potential(p3, zeros(p3));
  Eigen::MatrixXd L0(3, 3);
  L0 << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  for (int j = 0; j < 3; ++j) {
    Field e = Field::Zero(3);
    e[j] = 1.0;
    CHECK((b0.apply(e) - L0.col(j)).norm() < 1e-14);
  }
  const auto ev1 = eigenvalues_of(attach_potential(p3, Field::Ones(3)));
  CHECK(ev1[0] == doctest::Approx(1.0));
  CHECK(ev1[1] == doctest::Approx(2.0));
  CHECK(ev1[2] == doctest::Approx(4.0));

  const auto r = build_radial_graph(3, 1.0, 100);
  const auto br = attach_potential(r, [](const std::vector<double>& x) { return std::pow(x[0], -1.5); });
  CHECK(decompose(br).eigenvalues[0] > 0.0);

  Field neg = Field::Ones(3);
  neg[1] = -0.1;
  CHECK(code_of([&] { attach_potential(p3, neg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("attach_divergence_form") {
  const auto g = build_grid({8, 8}, 1.0, true);
  const auto plain = attach_potential(g, zeros(g));
  const auto id = attach_divergence_form(g, CoefficientField::scalar(g, 1.0));
  CHECK((plain.symmetric_matrix() - id.symmetric_matrix()).norm() < 1e-13);

  lps::Rng rng(3);
  const Field f = random_field(id.dim(), rng);
  const auto twice = attach_divergence_form(g, CoefficientField::scalar(g, 2.0));
  CHECK(twice.quadratic_form(f) == doctest::Approx(2.0 * id.quadratic_form(f)).epsilon(1e-13));

  const auto ev1 = eigenvalues_of(attach_divergence_form(g, CoefficientField::scalar(g, 1.0)));
  const auto ev10 = eigenvalues_of(attach_divergence_form(g, CoefficientField::scalar(g, 10.0)));
  const auto evc = eigenvalues_of(attach_divergence_form(g, CoefficientField::checkerboard(g, 1.0, 10.0)));
  for (Eigen::Index i = 0; i < evc.size(); ++i) {
    CHECK(evc[i] >= ev1[i] * (1 - 1e-12));
    CHECK(evc[i] <= ev10[i] * (1 + 1e-12));
  }
  const auto field = CoefficientField::checkerboard(g, 1.0, 10.0);
  for (double a : field.edge_coefficient) CHECK(a >= field.ellipticity);

  const auto radial = build_radial_graph(2, 1.0, 10);
  CHECK(code_of([&] { attach_divergence_form(radial, CoefficientField{}); }) == ErrorCode::Unsupported);
}

TEST_CASE("gradient_field") {
  const auto p3 = build_path_graph(3, 1.0);
  const auto b = attach_potential(p3, zeros(p3));
  const Field f = (Field(3) << 1, 0, -1).finished();
  const Field g2 = gradient_squared(b, f);
  CHECK(g2[0] == doctest::Approx(0.5));
  CHECK(g2[1] == doctest::Approx(1.0));
  CHECK(g2[2] == doctest::Approx(0.5));
  CHECK(b.measure().dot(g2) == doctest::Approx(2.0));
  CHECK(b.quadratic_form(f) == doctest::Approx(2.0));
  CHECK(gradient_squared(b, Field::Constant(3, 4.2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("property: exact integration by parts, symmetry and positivity") {
  for_all_cases(101, 40, [](std::size_t, lps::Rng& rng) {
    const auto b = random_bundle(rng);
    for (int k = 0; k < 5; ++k) {
      const Field f = random_field(b.dim(), rng);
      const Field g = random_field(b.dim(), rng);
      const double q = b.quadratic_form(f);
      const double q_inner = b.inner(b.apply(f), f);
      const double rhs = b.measure().dot(gradient_squared(b, f)) + b.measure().dot(potential_squared(b, f));
      CHECK(std::abs(q_inner - rhs) <= 1e-10 * (1.0 + std::abs(q_inner)));
      CHECK(std::abs(q - rhs) <= 1e-10 * (1.0 + std::abs(q)));
      const double lfg = b.inner(b.apply(f), g), flg = b.inner(f, b.apply(g));
      CHECK(std::abs(lfg - flg) <= 1e-10 * (1.0 + std::abs(lfg)));
      CHECK(q / b.inner(f, f) >= -1e-10);
    }
  });
}

TEST_CASE("property: kernel dimension equals the number of components") {
  const WeightedGraph g({1, 2, 1, 1, 3, 1}, {{0, 1, 1.0}, {1, 2, 2.0}, {3, 4, 1.0}});
  CHECK(g.n_components() == 3);
  CHECK(decompose(attach_potential(g, zeros(g))).kernel_dim == 3);
  for (std::size_t side : {5u, 8u}) {
    const auto cs = build_connected_sum(2, side, 1);
    CHECK(decompose(attach_potential(cs, zeros(cs))).kernel_dim == cs.n_components());
  }
}

TEST_CASE("property: scalar coefficient fields scale the spectrum exactly") {
  const auto g = build_grid({6, 7}, 0.5, true);
  const auto base = eigenvalues_of(attach_divergence_form(g, CoefficientField::scalar(g, 1.0)));
  for (double c : {0.3, 2.0, 7.5}) {
    const auto ev = eigenvalues_of(attach_divergence_form(g, CoefficientField::scalar(g, c)));
    CHECK((ev - c * base).norm() <= 1e-10 * c * base.norm());
  }
}

TEST_CASE("check_reverse_holder") {
  const auto r = build_radial_graph(3, 2.0, 50);
  const std::vector<double> radii{0.25, 0.5, 1.0};
  const auto one = check_reverse_holder(r, Field::Ones(50), 2.0, radii);
  CHECK(one.constant == doctest::Approx(1.0));
  const auto zero = check_reverse_holder(r, Field::Zero(50), 2.0, radii);
  CHECK(zero.constant == doctest::Approx(1.0));
  CHECK_FALSE(zero.infinite);

  auto constant_at = [&](std::size_t m, double q) {
    const auto g = build_radial_graph(3, 1.0, m);
    Field V(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) V[static_cast<Eigen::Index>(i)] = std::pow(g.radius(i), -1.5);
    return check_reverse_holder(g, V, q, {0.05, 0.1, 0.2, 0.4}).constant;
  };
  const double a = constant_at(100, 1.9), b = constant_at(200, 1.9), c = constant_at(400, 1.9);
  CHECK(std::isfinite(c));
  CHECK(std::abs(c / a - 1.0) < 0.1);
  CHECK(b <= c * (1 + 1e-9));
  const double x = constant_at(100, 2.5), y = constant_at(200, 2.5), z = constant_at(400, 2.5);
  CHECK(y > x);
  CHECK(z > y);

  const WeightedGraph spiky({1.0, 1.0}, {{0, 1, 1.0}}, {{0.0}, {1.0}});
  Field v(2);
  v << 0.0, 0.0;
  CHECK(check_reverse_holder(spiky, v, 2.0, {0.5}).constant == doctest::Approx(1.0));
}

TEST_CASE("graph and bundle serialization round trip") {
  const auto g = build_grid({4, 5}, 0.5, true);
  const auto b = attach_divergence_form(g, CoefficientField::checkerboard(g, 1.0, 3.0));
  const auto back = bundle_from_json(bundle_to_json(b));
  CHECK(back.content_hash() == b.content_hash());
  CHECK((back.symmetric_matrix() - b.symmetric_matrix()).norm() == 0.0);

  const auto r = build_radial_graph(3, 1.0, 12);
  const auto br = attach_potential(r, [](const std::vector<double>& x) { return 1.0 + x[0]; });
  const auto path = std::filesystem::temp_directory_path() / "lps_roundtrip_test.json";
  save_bundle(path, br);
  const auto loaded = load_bundle(path);
  std::filesystem::remove(path);
  CHECK(loaded.content_hash() == br.content_hash());
  CHECK(graph_from_json(graph_to_json(r)).n_vertices() == 12);

  auto j = graph_to_json(r);
  j["format"] = "something-else";
  CHECK_THROWS_AS(graph_from_json(j), Error);
}
