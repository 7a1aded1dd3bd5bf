#include "doctest.h"

#include <cmath>

#include "lps/error.hpp"
#include "lps/functionals.hpp"
#include "lps/riesz.hpp"
#include "support.hpp"

using namespace lps;
using lps::testing::for_all_cases;
using lps::testing::random_bundle;
using lps::testing::random_field;

namespace {

const Field kEigen1 = (Field(3) << 1, 0, -1).finished();

OperatorBundle p3() {
  const auto g = build_path_graph(3, 1.0);
  return attach_potential(g, Field::Zero(3));
}

}  // namespace

TEST_CASE("transforms of the P3 eigenvector") {
  const auto b = p3();
  const auto dec = decompose(b);
  const Field grad = gradient_field(b, kEigen1);
  const Field full = riesz_apply(b, dec, RieszKind::Full, kEigen1, Gamma::Gradient);
  CHECK((full - grad).norm() < 1e-12);
  CHECK(lp_norm(b, full, 2.0) == doctest::Approx(std::sqrt(2.0)));
  const Field local = riesz_apply(b, dec, RieszKind::Local, kEigen1, Gamma::Gradient);
  CHECK((local - grad / std::sqrt(2.0)).norm() < 1e-12);
  CHECK(lp_norm(b, local, 2.0) == doctest::Approx(1.0));
  const Field inf = riesz_apply(b, dec, RieszKind::Infinity, kEigen1, Gamma::Gradient);
  CHECK((inf - std::exp(-1.0) * grad).norm() < 1e-12);

  try {
    riesz_apply(b, dec, RieszKind::Full, Field::Ones(3), Gamma::Gradient, false);
    FAIL("expected kernel collision");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KernelCollision);
  }
  CHECK_NOTHROW(riesz_apply(b, dec, RieszKind::Local, Field::Ones(3), Gamma::Gradient, false));
}

TEST_CASE("property: p = 2 Riesz identity") {
  for_all_cases(707, 20, [](std::size_t, lps::Rng& rng) {
    const auto b = random_bundle(rng, 150);
    const auto dec = decompose(b);
    for (int k = 0; k < 5; ++k) {
      const Field f = random_field(b.dim(), rng);
      const Field fp = dec.project_off_kernel(f);
      const Field r = riesz_apply(b, dec, RieszKind::Full, f, Gamma::Both);
      CHECK(b.measure().dot(r.cwiseAbs2()) == doctest::Approx(b.inner(fp, fp)).epsilon(1e-9));
    }
  });
}

TEST_CASE("estimate_riesz_norm at p = 2") {
  const auto g = build_grid({7, 7}, 1.0 / 6.0, false);
  const auto b = attach_potential(g, Field::Zero(49));
  const auto dec = decompose(b);
  const auto full = estimate_riesz_norm(b, dec, RieszKind::Full, 2.0, 16, 3);
  const auto local = estimate_riesz_norm(b, dec, RieszKind::Local, 2.0, 16, 3);
  const auto inf = estimate_riesz_norm(b, dec, RieszKind::Infinity, 2.0, 16, 3);
  CHECK(full.norm <= 1.0 + 1e-8);
  CHECK(local.norm <= 1.0 + 1e-8);
  CHECK(full.kernel_dim == 1);
  CHECK(full.exact_bound_applies);
  CHECK(full.within_exact_bound);
  CHECK(local.norm <= full.norm + 1e-12);
  CHECK(inf.norm <= full.norm + 1e-12);

  // the witness reproduces the ratio
  const Field r = riesz_apply(b, dec, RieszKind::Full, full.witness, Gamma::Both);
  const double ratio = lp_norm(b, r, 2.0) / lp_norm(b, full.witness, 2.0);
  CHECK(std::abs(ratio - full.norm) <= 1e-9);
}

TEST_CASE("Chen decomposition") {
  CHECK(chen_phi(1e4) > 0.9);
  CHECK(chen_phi(1e4) < 1.1);
  CHECK(chen_phi(1e-6) == doctest::Approx(1e-3).epsilon(1e-3));
  const auto g = build_grid({20, 20}, 1.0 / 19.0, false);
  const auto b = attach_potential(g, Field::Zero(400));
  const auto dec = decompose(b);
  CHECK(dec.lambda_max() >= 50.0);
  for (double p : {2.0, 4.0}) {
    const auto rep = chen_decomposition_check(b, dec, p, 12, 5);
    CHECK(rep.max_violation <= 1e-9);
    CHECK(rep.phi_at_lambda_max > 0.9);
    CHECK(rep.phi_at_lambda_max < 1.1);
    CHECK(std::isfinite(rep.phi_sup));
  }
  // smallest non-zero eigenvalue of the 60 x 60 unit grid is 2 - 2 cos(pi/60)
  const double lam = 2.0 - 2.0 * std::cos(std::acos(-1.0) / 60.0);
  CHECK(chen_phi(lam) < 0.2);
}

TEST_CASE("multiplicative inequality") {
  const auto b = p3();
  const auto dec = decompose(b);
  const auto rep = multiplicative_inequality_check(b, dec, 2.0, 16, 4);
  CHECK(rep.max_ratio <= 1.0 + 1e-9);
  const double ratio = std::pow(lp_norm(b, gradient_field(b, kEigen1), 2.0), 2) /
                       (lp_norm(b, b.apply(kEigen1), 2.0) * lp_norm(b, kEigen1, 2.0));
  CHECK(ratio == doctest::Approx(1.0).epsilon(1e-12));

  auto at = [](std::size_t side) {
    const auto g = build_grid({side, side}, 1.0 / static_cast<double>(side - 1), true);
    const auto bg = attach_potential(g, Field::Zero(static_cast<Eigen::Index>(g.n_vertices())));
    return multiplicative_inequality_check(bg, decompose(bg), 4.0, 16, 4).max_ratio;
  };
  const double a = at(16), c = at(32);
  CHECK(std::isfinite(a));
  CHECK(std::abs(c / a - 1.0) <= 0.2);
}

TEST_CASE("kind names round trip") {
  for (auto k : {RieszKind::Full, RieszKind::Local, RieszKind::Infinity}) CHECK(riesz_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(riesz_kind_from_string("partial"), Error);
}
