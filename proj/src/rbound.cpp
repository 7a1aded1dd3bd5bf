#include "lps/rbound.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lps/error.hpp"
#include "lps/functionals.hpp"
#include "lps/probes.hpp"
#include "lps/rng.hpp"

namespace lps {

Eigen::MatrixXd rademacher_sample(std::size_t k, std::size_t trials, std::uint64_t seed) {
  require(k >= 1 && trials >= 1, ErrorCode::InvalidArgument, "rademacher_sample needs k, trials >= 1");
  Eigen::MatrixXd r(static_cast<Eigen::Index>(trials), static_cast<Eigen::Index>(k));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) r(i, j) = rng.sign();
  return r;
}

// ---------------------------------------------------------------------------

Field OperatorFamily::pre_gamma(const SpectralDecomposition& dec, double t, const Field& f) const {
  require(contains(t), ErrorCode::InvalidArgument,
          "t = " + std::to_string(t) + " lies outside the parameter domain of " + label);
  return apply_profile(dec, [&](double lam) { return profile(t, lam); }, f);
}

Field OperatorFamily::pointwise_squared(const OperatorBundle& b, const Field& u) const {
  if (!apply_gamma) return u.array().square().matrix();
  return gamma_squared(b, u, gamma);
}

bool OperatorFamily::contains(double t) const {
  const bool lo_ok = domain.first == 0.0 ? t > 0.0 : t >= domain.first;
  return lo_ok && t <= domain.second;
}

OperatorFamily OperatorFamily::heat_gradient(Gamma g) {
  return {"heat-gradient", true, g, [](double t, double lam) { return std::sqrt(t) * std::exp(-t * lam); },
          {0.0, 1e300}};
}

OperatorFamily OperatorFamily::resolvent(double dp, Gamma g) {
  require(dp > 0.0, ErrorCode::InvalidArgument, "resolvent exponent must be positive");
  std::ostringstream os;
  os << "resolvent(" << dp << ")";
  return {os.str(), true, g,
          [dp](double t, double lam) { return std::sqrt(t) * std::pow(1.0 + t * lam, -dp); },
          {0.0, 1e300}};
}

OperatorFamily OperatorFamily::local(Gamma g) {
  return {"local", true, g, [](double t, double lam) { return std::sqrt(t) * std::exp(-t * lam); },
          {0.0, 1.0}};
}

OperatorFamily OperatorFamily::infinity(Gamma g) {
  return {"infinity", true, g,
          [](double t, double lam) { return std::sqrt(t - 1.0) * std::exp(-t * lam); }, {1.0, 1e300}};
}

OperatorFamily OperatorFamily::identity() {
  return {"identity", false, Gamma::Both, [](double, double) { return 1.0; }, {0.0, 1e300}};
}

OperatorFamily OperatorFamily::scaled_identity(double c) {
  std::ostringstream os;
  os << c << "*identity";
  return {os.str(), false, Gamma::Both, [c](double, double) { return c; }, {0.0, 1e300}};
}

OperatorFamily OperatorFamily::by_name(const std::string& name, Gamma g) {
  if (name == "heat-gradient") return heat_gradient(g);
  if (name == "resolvent") return resolvent(1.0, g);
  if (name == "local") return local(g);
  if (name == "infinity") return infinity(g);
  if (name == "identity") return identity();
  fail(ErrorCode::Validation, "unknown operator family '" + name + "'");
}

std::string to_string(RFormulation f) {
  switch (f) {
    case RFormulation::Expectation: return "expectation";
    case RFormulation::SquareFunction: return "square_function";
    case RFormulation::L2Valued: return "l2_valued";
  }
  return "square_function";
}

std::vector<std::size_t> ratio_histogram(const std::vector<double>& ratios) {
  std::vector<std::size_t> h(kHistogramBins, 0);
  for (double r : ratios) {
    if (!std::isfinite(r) || r < 0.0) continue;
    const auto bin = static_cast<std::size_t>(r / kHistogramWidth);
    ++h[std::min(bin, kHistogramBins - 1)];
  }
  return h;
}

nlohmann::json to_json(const RBoundEstimate& e) {
  nlohmann::json j;
  j["family"] = e.family;
  j["formulation"] = to_string(e.formulation);
  j["p"] = e.p;
  j["seed"] = e.seed;
  j["trials"] = e.trials;
  j["empirical_constant"] = e.empirical_constant;
  j["mean_ratio"] = e.mean_ratio;
  if (e.formulation == RFormulation::Expectation) {
    j["second_moment_ratio"] = e.second_moment_ratio;
    j["kahane_corridor"] = "factor 4 against the square form: an empirical policy, not a proven constant";
  }
  j["ratio_samples"] = e.ratio_samples;
  j["histogram"] = {{"bin_width", kHistogramWidth}, {"bins", kHistogramBins},
                    {"counts", ratio_histogram(e.ratio_samples)}};
  j["lower_bound_only"] = true;
  return j;
}

// ---------------------------------------------------------------------------

namespace {

struct Prepared {
  std::vector<Field> pre;  // s(t_k, L) f_k
  const std::vector<Field>* f;
};

Prepared prepare(const SpectralDecomposition& dec, const OperatorFamily& family,
                 const std::vector<double>& t_list, const std::vector<Field>& f_list) {
  require(!t_list.empty() && t_list.size() == f_list.size(), ErrorCode::InvalidArgument,
          "t_list and f_list must be non-empty and of equal length");
  Prepared pr;
  pr.f = &f_list;
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    require(f_list[k].size() == static_cast<Eigen::Index>(dec.size()), ErrorCode::InvalidArgument,
            "f_list entry has the wrong size");
    pr.pre.push_back(family.pre_gamma(dec, t_list[k], f_list[k]));
  }
  return pr;
}

Field signed_sum(const std::vector<Field>& v, const Eigen::Ref<const Eigen::RowVectorXd>& r) {
  Field s = Field::Zero(v.front().size());
  for (std::size_t k = 0; k < v.size(); ++k) s += r[static_cast<Eigen::Index>(k)] * v[k];
  return s;
}

double family_norm(const OperatorBundle& b, const OperatorFamily& family, const Field& u, double p) {
  return lp_norm(b.measure(), family.pointwise_squared(b, u).cwiseMax(0.0).cwiseSqrt(), p);
}

}  // namespace

RBoundEstimate rbound_ratio_expectation(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                        const OperatorFamily& family, double p,
                                        const std::vector<double>& t_list,
                                        const std::vector<Field>& f_list, std::size_t trials,
                                        std::uint64_t seed, std::size_t batches) {
  require(trials >= 1, ErrorCode::InvalidArgument, "trials must be >= 1");
  const Prepared pr = prepare(dec, family, t_list, f_list);
  RBoundEstimate est;
  est.p = p;
  est.formulation = RFormulation::Expectation;
  est.seed = seed;
  est.family = family.label;

  if (t_list.size() == 1) {
    // One Rademacher variable cancels: the ratio is deterministic.
    const double den = lp_norm(bundle.measure(), f_list[0], p);
    require(den >= 1e-14, ErrorCode::DegenerateInput, "denominator expectation below 1e-14");
    const double r = family_norm(bundle, family, pr.pre[0], p) / den;
    est.trials = 1;
    est.ratio_samples = {r};
    est.empirical_constant = est.mean_ratio = est.second_moment_ratio = r;
    return est;
  }

  const Eigen::MatrixXd signs = rademacher_sample(t_list.size(), trials, seed);
  const std::size_t nb = std::clamp<std::size_t>(batches, 1, trials);
  std::vector<double> bnum(nb, 0.0), bden(nb, 0.0);
  double num = 0.0, den = 0.0, num2 = 0.0, den2 = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto r = signs.row(static_cast<Eigen::Index>(i));
    const double a = family_norm(bundle, family, signed_sum(pr.pre, r), p);
    const double b = lp_norm(bundle.measure(), signed_sum(f_list, r), p);
    num += a;
    den += b;
    num2 += a * a;
    den2 += b * b;
    bnum[i * nb / trials] += a;
    bden[i * nb / trials] += b;
  }
  require(den / static_cast<double>(trials) >= 1e-14, ErrorCode::DegenerateInput,
          "denominator expectation below 1e-14");
  est.trials = trials;
  for (std::size_t b = 0; b < nb; ++b)
    est.ratio_samples.push_back(bden[b] > 0.0 ? bnum[b] / bden[b] : 0.0);
  est.empirical_constant = *std::max_element(est.ratio_samples.begin(), est.ratio_samples.end());
  est.mean_ratio = num / den;
  est.second_moment_ratio = std::sqrt(num2 / den2);
  return est;
}

double rbound_ratio_expectation_exact(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                      const OperatorFamily& family, double p,
                                      const std::vector<double>& t_list,
                                      const std::vector<Field>& f_list, int moment) {
  require(moment == 1 || moment == 2, ErrorCode::InvalidArgument, "moment must be 1 or 2");
  require(t_list.size() <= 20, ErrorCode::ResourceLimit, "exact enumeration is limited to k <= 20");
  const Prepared pr = prepare(dec, family, t_list, f_list);
  const std::size_t k = t_list.size();
  // The global sign flip leaves both norms unchanged: fix r_0 = +1.
  const std::uint64_t count = std::uint64_t{1} << (k - 1);
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(k));
  double num = 0.0, den = 0.0;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    r[0] = 1.0;
    for (std::size_t j = 1; j < k; ++j) r[static_cast<Eigen::Index>(j)] = (mask >> (j - 1)) & 1U ? -1.0 : 1.0;
    const double a = family_norm(bundle, family, signed_sum(pr.pre, r), p);
    const double b = lp_norm(bundle.measure(), signed_sum(f_list, r), p);
    num += moment == 1 ? a : a * a;
    den += moment == 1 ? b : b * b;
  }
  require(den / static_cast<double>(count) >= 1e-14, ErrorCode::DegenerateInput,
          "denominator expectation below 1e-14");
  return moment == 1 ? num / den : std::sqrt(num / den);
}

RBoundEstimate rbound_ratio_square(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                   const OperatorFamily& family, double p,
                                   const std::vector<double>& t_list, const std::vector<Field>& f_list) {
  const Prepared pr = prepare(dec, family, t_list, f_list);
  Field num = Field::Zero(static_cast<Eigen::Index>(bundle.dim()));
  for (const auto& u : pr.pre) num += family.pointwise_squared(bundle, u);
  const double den = sequence_rhs_norm(bundle.measure(), f_list, p);
  require(den > 0.0, ErrorCode::DegenerateInput, "square-form denominator vanishes");
  RBoundEstimate est;
  est.p = p;
  est.formulation = RFormulation::SquareFunction;
  est.family = family.label;
  est.trials = 1;
  const double r = lp_norm(bundle.measure(), num.cwiseMax(0.0).cwiseSqrt(), p) / den;
  est.ratio_samples = {r};
  est.empirical_constant = est.mean_ratio = r;
  return est;
}

double rbound_l2valued(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                       const OperatorFamily& family, double p, const std::vector<Field>& u,
                       const std::vector<double>& t_nodes, const std::vector<double>& t_weights) {
  require(!u.empty() && u.size() == t_nodes.size() && u.size() == t_weights.size(),
          ErrorCode::InvalidArgument, "u, t_nodes and t_weights must have equal non-zero length");
  const auto n = static_cast<Eigen::Index>(bundle.dim());
  Field num = Field::Zero(n), den = Field::Zero(n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    require(t_weights[i] >= 0.0, ErrorCode::InvalidArgument, "quadrature weights must be >= 0");
    num += t_weights[i] * family.pointwise_squared(bundle, family.pre_gamma(dec, t_nodes[i], u[i]));
    den += t_weights[i] * u[i].array().square().matrix();
  }
  const double d = lp_norm(bundle.measure(), den.cwiseSqrt(), p);
  require(d > 0.0, ErrorCode::DegenerateInput, "L2-valued denominator vanishes");
  return lp_norm(bundle.measure(), num.cwiseMax(0.0).cwiseSqrt(), p) / d;
}

RBoundEstimate estimate_rbound_constant(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                        const OperatorFamily& family, double p, std::size_t budget,
                                        std::size_t k_max, std::uint64_t seed) {
  require(budget >= 1 && k_max >= 1, ErrorCode::InvalidArgument, "budget and k_max must be >= 1");
  const double lmax = std::max(dec.lambda_max(), 1e-12);
  double lmin = dec.lambda_min_positive();
  if (lmin <= 0.0) lmin = lmax;
  const double t_lo = std::max(family.domain.first, 1e-3 / lmax);
  const double t_hi = std::min(family.domain.second, 40.0 / lmin);
  auto clamp_t = [&](double t) {
    t = std::clamp(t, t_lo, std::max(t_lo, t_hi));
    if (!family.contains(t)) t = family.domain.first > 0.0 ? family.domain.first : t_lo;
    return t;
  };

  ProbeBattery battery(bundle, dec, derive_seed(seed, 0x7262));
  const std::size_t n_modes = dec.size() - dec.kernel_dim;
  RBoundEstimate est;
  est.p = p;
  est.formulation = RFormulation::SquareFunction;
  est.seed = seed;
  est.family = family.label;
  est.trials = budget;
  double sum = 0.0;
  for (std::size_t i = 0; i < budget; ++i) {
    Rng rng(derive_seed(seed, i));
    const std::size_t k = 1 + static_cast<std::size_t>(rng.below(k_max));
    const int pattern = static_cast<int>(i % 5);
    std::vector<double> t(k);
    std::vector<Field> f(k);
    std::string label;
    for (std::size_t j = 0; j < k; ++j) {
      switch (pattern) {
        case 0:  // log-uniform over the spectral range
          t[j] = std::exp(rng.uniform(std::log(t_lo), std::log(std::max(t_hi, t_lo * 1.0001))));
          label = "random-t";
          break;
        case 1:
          t[j] = std::pow(4.0, static_cast<double>(j)) / lmax;
          label = "ladder";
          break;
        case 2:
          t[j] = 1e-3 * std::pow(4.0, static_cast<double>(j)) / lmax;
          label = "near-zero";
          break;
        case 3:
          t[j] = rng.uniform(0.25, 4.0) / lmin;
          label = "gap-scale";
          break;
        default:
          label = "eigen-slice";
          break;
      }
      if (pattern == 4 && n_modes > 0) {
        const std::size_t m = dec.kernel_dim + static_cast<std::size_t>(rng.below(std::min<std::size_t>(n_modes, 16)));
        f[j] = dec.eigenvectors.col(static_cast<Eigen::Index>(m));
        t[j] = 0.5 / std::max(dec.eigenvalues[static_cast<Eigen::Index>(m)], 1e-12);
        if (family.domain.first >= 1.0) t[j] += 1.0;
      } else {
        f[j] = battery(1 + static_cast<std::size_t>(rng.below(4096))).f;
      }
      t[j] = clamp_t(t[j]);
    }
    double r = 0.0;
    try {
      r = rbound_ratio_square(bundle, dec, family, p, t, f).empirical_constant;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput) throw;
    }
    est.ratio_samples.push_back(r);
    est.sample_labels.push_back(label + ":k=" + std::to_string(k));
    est.empirical_constant = std::max(est.empirical_constant, r);
    sum += r;
  }
  est.mean_ratio = sum / static_cast<double>(budget);
  return est;
}

}  // namespace lps
