#include "lps/riesz.hpp"

#include <cmath>

#include "lps/error.hpp"
#include "lps/functionals.hpp"
#include "lps/probes.hpp"

namespace lps {

std::string to_string(RieszKind k) {
  switch (k) {
    case RieszKind::Full: return "full";
    case RieszKind::Local: return "local";
    case RieszKind::Infinity: return "infinity";
  }
  return "full";
}

RieszKind riesz_kind_from_string(const std::string& s) {
  if (s == "full") return RieszKind::Full;
  if (s == "local") return RieszKind::Local;
  if (s == "infinity") return RieszKind::Infinity;
  fail(ErrorCode::Validation, "unknown Riesz kind '" + s + "'");
}

double riesz_multiplier(RieszKind kind, double lambda) {
  switch (kind) {
    case RieszKind::Full: return 1.0 / std::sqrt(lambda);
    case RieszKind::Local: return 1.0 / std::sqrt(lambda + 1.0);
    case RieszKind::Infinity: return std::exp(-lambda) / std::sqrt(lambda);
  }
  return 0.0;
}

Field riesz_potential(const SpectralDecomposition& dec, RieszKind kind, const Field& f,
                      bool project_kernel) {
  Eigen::VectorXd c = dec.coefficients(f);
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (kind != RieszKind::Local && dec.in_kernel(static_cast<std::size_t>(j))) {
      if (c[j] != 0.0 && !project_kernel && std::abs(c[j]) > 1e-12 * (1.0 + c.cwiseAbs().maxCoeff()))
        fail(ErrorCode::KernelCollision, "L^{-1/2} applied to a function with a kernel component");
      c[j] = 0.0;
      continue;
    }
    c[j] *= riesz_multiplier(kind, dec.eigenvalues[j]);
  }
  return dec.synthesize(c);
}

Field riesz_apply(const OperatorBundle& bundle, const SpectralDecomposition& dec, RieszKind kind,
                  const Field& f, Gamma gamma, bool project_kernel) {
  return gamma_squared(bundle, riesz_potential(dec, kind, f, project_kernel), gamma).cwiseMax(0.0).cwiseSqrt();
}

RieszReport estimate_riesz_norm(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                RieszKind kind, double p, std::size_t budget, std::uint64_t seed,
                                Gamma gamma) {
  require(budget >= 1, ErrorCode::InvalidArgument, "budget must be >= 1");
  RieszReport rep;
  rep.kind = kind;
  rep.gamma = gamma;
  rep.p = p;
  rep.seed = seed;
  rep.budget = budget;
  rep.kernel_dim = kind == RieszKind::Local ? 0 : dec.kernel_dim;
  ProbeBattery battery(bundle, dec, seed);
  bool have = false;
  std::size_t ascent = 0, next_probe = 0;
  for (std::size_t i = 0; i < budget; ++i) {
    const Probe pr = have && i % 4 == 3 ? battery.perturb(rep.witness, ascent++) : battery(next_probe++);
    const double den = lp_norm(bundle.measure(), pr.f, p);
    const double r = den > 0.0 ? lp_norm(bundle.measure(), riesz_apply(bundle, dec, kind, pr.f, gamma), p) / den : 0.0;
    rep.ratios.push_back(r);
    if (!have || r > rep.norm) {
      rep.norm = r;
      rep.witness = pr.f;
      rep.witness_label = pr.label;
      have = true;
    }
  }
  // At p = 2 with both channels, ||Gamma u||_2^2 = <Lu, u>: every kind is a
  // contraction. A single channel is dominated by the pair.
  if (p == 2.0) {
    rep.exact_bound_applies = true;
    rep.within_exact_bound = rep.norm <= rep.exact_bound + 1e-8;
  }
  return rep;
}

double chen_phi(double z) {
  if (z <= 0.0) return 0.0;
  return std::sqrt(z + 1.0) * (-std::expm1(-z)) / std::sqrt(z);
}

ChenReport chen_decomposition_check(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                    double p, std::size_t budget, std::uint64_t seed, Gamma gamma) {
  ChenReport rep;
  rep.p = p;
  for (std::size_t j = dec.kernel_dim; j < dec.size(); ++j)
    rep.phi_sup = std::max(rep.phi_sup, chen_phi(dec.eigenvalues[static_cast<Eigen::Index>(j)]));
  rep.phi_at_lambda_max = chen_phi(dec.lambda_max());
  rep.phi_at_lambda_min = chen_phi(dec.lambda_min_positive());

  ProbeBattery battery(bundle, dec, seed);
  auto norm_of = [&](const Field& u) {
    return lp_norm(bundle.measure(), gamma_squared(bundle, u, gamma).cwiseMax(0.0).cwiseSqrt(), p);
  };
  for (std::size_t i = 0; i < budget; ++i) {
    const Field f = battery(i).f;
    Eigen::VectorXd c = dec.coefficients(f);
    Eigen::VectorXd c_full = c, c_inf = c, c_loc = c;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      if (dec.in_kernel(static_cast<std::size_t>(j))) {
        c_full[j] = c_inf[j] = c_loc[j] = 0.0;
        continue;
      }
      const double lam = dec.eigenvalues[j];
      c_full[j] *= riesz_multiplier(RieszKind::Full, lam);
      c_inf[j] *= riesz_multiplier(RieszKind::Infinity, lam);
      c_loc[j] *= riesz_multiplier(RieszKind::Local, lam) * chen_phi(lam);
    }
    const double lhs = norm_of(dec.synthesize(c_full));
    const double rhs = norm_of(dec.synthesize(c_inf)) + norm_of(dec.synthesize(c_loc));
    rep.max_violation = std::max(rep.max_violation, lhs - rhs);
    const double den = lp_norm(bundle.measure(), f, p);
    if (den > 0.0) rep.max_lhs_ratio = std::max(rep.max_lhs_ratio, lhs / den);
    ++rep.probes;
  }
  return rep;
}

MultiplicativeReport multiplicative_inequality_check(const OperatorBundle& bundle,
                                                     const SpectralDecomposition& dec, double p,
                                                     std::size_t budget, std::uint64_t seed,
                                                     Gamma gamma) {
  MultiplicativeReport rep;
  rep.p = p;
  ProbeBattery battery(bundle, dec, seed);
  for (std::size_t i = 0; i < budget; ++i) {
    const Probe pr = battery(i);
    const double nf = lp_norm(bundle.measure(), pr.f, p);
    const double nl = lp_norm(bundle.measure(), bundle.apply(pr.f), p);
    if (nf <= 0.0 || nl <= 1e-14 * (1.0 + nf)) {
      ++rep.skipped;
      continue;
    }
    const double ng = lp_norm(bundle.measure(), gamma_squared(bundle, pr.f, gamma).cwiseMax(0.0).cwiseSqrt(), p);
    const double r = ng * ng / (nl * nf);
    if (r > rep.max_ratio) {
      rep.max_ratio = r;
      rep.witness_label = pr.label;
    }
    ++rep.probes;
  }
  return rep;
}

}  // namespace lps
