#include "lps/functionals.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/SparseCore>

#include "lps/error.hpp"
#include "lps/probes.hpp"

namespace lps {

std::string to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::H: return "H";
    case FunctionalKind::HF: return "H_F";
    case FunctionalKind::G: return "G";
    case FunctionalKind::HLoc: return "H_loc";
    case FunctionalKind::HInf: return "H_inf";
    case FunctionalKind::Q: return "Q";
  }
  return "H";
}

FunctionalKind functional_kind_from_string(const std::string& s) {
  if (s == "H") return FunctionalKind::H;
  if (s == "H_F" || s == "HF") return FunctionalKind::HF;
  if (s == "G") return FunctionalKind::G;
  if (s == "H_loc" || s == "Hloc") return FunctionalKind::HLoc;
  if (s == "H_inf" || s == "Hinf") return FunctionalKind::HInf;
  if (s == "Q") return FunctionalKind::Q;
  fail(ErrorCode::Validation, "unknown functional kind '" + s + "'");
}

std::string to_string(ChannelCombination c) { return c == ChannelCombination::Sum ? "sum" : "l2"; }

FunctionalSpec FunctionalSpec::of(FunctionalKind kind, Gamma gamma, ChannelCombination combine) {
  FunctionalSpec s;
  s.kind = kind;
  s.gamma = gamma;
  s.combine = combine;
  return s;
}

std::pair<double, double> FunctionalSpec::interval() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case FunctionalKind::HLoc:
    case FunctionalKind::Q: return {0.0, 1.0};
    case FunctionalKind::HInf: return {1.0, inf};
    default: return {0.0, inf};
  }
}

double FunctionalSpec::profile(std::size_t k, double t, double lambda) const {
  const double lam = std::max(lambda, 0.0);
  if (kind == FunctionalKind::G) return multipliers.at(k)(t * lam);
  const double mk = multipliers.empty() ? 1.0 : multipliers.at(k)(lam);
  if (kind == FunctionalKind::HF) return mk * outer(t * lam);
  return mk * std::exp(-t * lam);
}

bool FunctionalSpec::exponential_type() const {
  if (kind == FunctionalKind::G) {
    return !multipliers.empty() &&
           std::all_of(multipliers.begin(), multipliers.end(),
                       [](const MultiplierFunction& m) { return m.exponential_type(); });
  }
  if (kind == FunctionalKind::HF) return outer.exponential_type();
  return true;
}

std::string FunctionalSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind) << "[gamma=" << to_string(gamma) << ",combine=" << to_string(combine);
  if (kind == FunctionalKind::HF) os << ",F=" << outer.label();
  if (!multipliers.empty()) {
    os << ",m=";
    for (std::size_t k = 0; k < multipliers.size(); ++k) os << (k ? ";" : "") << multipliers[k].label();
  }
  os << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Time grid

namespace {

Decay profile_decay(const FunctionalSpec& spec) {
  if (spec.kind == FunctionalKind::G) {
    Decay worst{Decay::Kind::Compact, 0.0};
    for (const auto& m : spec.multipliers) {
      const Decay d = m.decay();
      auto rank = [](Decay::Kind k) {
        switch (k) {
          case Decay::Kind::Compact: return 0;
          case Decay::Kind::Exponential: return 1;
          case Decay::Kind::StretchedExponential: return 2;
          case Decay::Kind::Power: return 3;
          case Decay::Kind::None: return 4;
        }
        return 4;
      };
      if (rank(d.kind) > rank(worst.kind) ||
          (d.kind == worst.kind && d.kind == Decay::Kind::Exponential && d.rate < worst.rate) ||
          (d.kind == worst.kind && d.kind == Decay::Kind::Power && d.rate < worst.rate))
        worst = d;
    }
    return worst;
  }
  if (spec.kind == FunctionalKind::HF) return spec.outer.decay();
  return {Decay::Kind::Exponential, 2.0};
}

}  // namespace

TimeGrid TimeGrid::log_simpson(double a, double b, std::size_t nodes) {
  require(a > 0.0 && b > a, ErrorCode::InvalidArgument, "time grid needs 0 < a < b");
  std::size_t n = std::max<std::size_t>(nodes, 3);
  if (n % 2 == 0) ++n;
  TimeGrid g;
  g.t_lo = a;
  g.t_hi = b;
  const double la = std::log(a), lb = std::log(b);
  const double h = (lb - la) / static_cast<double>(n - 1);
  g.nodes.resize(n);
  g.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (i + 1 == n) ? lb : la + h * static_cast<double>(i);
    const double t = std::exp(u);
    const double c = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    g.nodes[i] = t;
    g.weights[i] = h / 3.0 * c * t;
  }
  return g;
}

TimeGrid TimeGrid::for_spec(const SpectralDecomposition& dec, const FunctionalSpec& spec,
                            std::size_t nodes) {
  const double lmax = std::max(dec.lambda_max(), 1e-300);
  double lmin = dec.lambda_min_positive();
  if (lmin <= 0.0) lmin = lmax;
  const auto [start, stop] = spec.interval();
  const Decay decay = profile_decay(spec);

  double t_min = 1e-6 / lmax;
  double t_max = 40.0 / lmin;
  switch (decay.kind) {
    case Decay::Kind::Exponential: t_max = 80.0 / (decay.rate * lmin); break;
    case Decay::Kind::StretchedExponential: t_max = 1600.0 / lmin; break;
    default: break;
  }

  if (decay.kind == Decay::Kind::Compact && spec.kind == FunctionalKind::G) {
    double s_lo = std::numeric_limits<double>::infinity(), s_hi = 0.0;
    for (const auto& m : spec.multipliers) {
      auto sup = m.support();
      s_lo = std::min(s_lo, std::max(sup->first, 1e-300));
      s_hi = std::max(s_hi, sup->second);
    }
    TimeGrid g = log_simpson(s_lo / lmax, s_hi / lmin, nodes);
    g.tail_policy = "compact";
    return g;
  }

  TimeGrid g;
  if (std::isfinite(stop)) {
    g = log_simpson(std::min(t_min, 0.5 * stop), stop, nodes);
  } else if (start > 0.0) {
    // Log-spaced in s = t - start, so decay scales right after the left end
    // are resolved as finely as they are near 0 on the full interval.
    g = log_simpson(t_min, t_max, nodes);
    for (double& t : g.nodes) t += start;
    g.t_lo = start;
    g.t_hi += start;
    g.head = t_min;
    g.weights.front() += g.head;
  } else {
    g = log_simpson(t_min, t_max, nodes);
  }
  if (start == 0.0) {
    g.head = g.t_lo;
    g.weights.front() += g.head;
  }
  if (!std::isfinite(stop)) {
    switch (decay.kind) {
      case Decay::Kind::Exponential:
        g.tail_factor = 1.0 / (decay.rate * lmin);
        g.tail_policy = "exponential";
        break;
      case Decay::Kind::StretchedExponential:
        g.tail_factor = std::sqrt(g.t_hi / lmin) + 0.5 / lmin;
        g.tail_policy = "stretched-exponential";
        break;
      case Decay::Kind::Power:
        require(decay.rate > 1.0, ErrorCode::Divergence,
                "outer function decays too slowly for the time integral to converge");
        g.tail_factor = g.t_hi / (decay.rate - 1.0);
        g.tail_policy = "power";
        break;
      case Decay::Kind::Compact: g.tail_policy = "compact"; break;
      case Decay::Kind::None:
        fail(ErrorCode::Divergence,
             "profile of " + spec.describe() + " does not decay in t; the integral diverges");
    }
    g.weights.back() += g.tail_factor;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Norms

double lp_norm(const Field& measure, const Field& f, double p) {
  require(std::isfinite(p) && p >= 1.0, ErrorCode::InvalidArgument, "p must be finite and >= 1");
  require(measure.size() == f.size(), ErrorCode::InvalidArgument, "lp_norm size mismatch");
  const double scale = f.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  const double s = (measure.array() * (f.array().abs() / scale).pow(p)).sum();
  return scale * std::pow(s, 1.0 / p);
}

double lp_norm(const OperatorBundle& b, const Field& f, double p) { return lp_norm(b.measure(), f, p); }

double sequence_rhs_norm(const Field& measure, const std::vector<Field>& f_list, double p) {
  require(!f_list.empty(), ErrorCode::InvalidArgument, "sequence norm needs a non-empty list");
  Field sq = Field::Zero(measure.size());
  for (const auto& f : f_list) {
    require(f.size() == measure.size(), ErrorCode::InvalidArgument, "sequence norm size mismatch");
    sq.array() += f.array().square();
  }
  return lp_norm(measure, sq.cwiseSqrt(), p);
}

// ---------------------------------------------------------------------------
// Shared engine pieces

namespace {

struct ChannelSquares {
  Field gradient;
  Field potential;
  bool projected = false;
};

bool needs_gradient(Gamma g) { return g != Gamma::Potential; }
bool needs_potential(Gamma g) { return g != Gamma::Gradient; }

Eigen::SparseMatrix<double> incidence(const OperatorBundle& b) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * b.edges().size());
  for (std::size_t e = 0; e < b.edges().size(); ++e) {
    t.emplace_back(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(b.edges()[e].u), 1.0);
    t.emplace_back(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(b.edges()[e].v), -1.0);
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(b.edges().size()),
                                static_cast<Eigen::Index>(b.dim()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Gamma-energy of eigenvector j for the requested channels.
double kernel_gamma_energy(const OperatorBundle& b, const SpectralDecomposition& dec, std::size_t j,
                           Gamma g) {
  const Field phi = dec.eigenvectors.col(static_cast<Eigen::Index>(j));
  return gamma_squared(b, phi, g).dot(dec.measure);
}

// Kernel modes: dropped when Gamma kills them, divergence otherwise (only
// when the t-interval is unbounded).
bool handle_kernel(const OperatorBundle& b, const SpectralDecomposition& dec, const FunctionalSpec& spec,
                   Eigen::VectorXd& c) {
  bool projected = false;
  const bool unbounded = !std::isfinite(spec.interval().second);
  for (std::size_t j = 0; j < dec.kernel_dim; ++j) {
    const auto J = static_cast<Eigen::Index>(j);
    if (c[J] == 0.0) continue;
    const double energy = kernel_gamma_energy(b, dec, j, spec.gamma);
    if (energy <= 1e-8 * (1.0 + dec.lambda_max())) {
      c[J] = 0.0;
      projected = projected || unbounded;
    } else if (unbounded) {
      fail(ErrorCode::Divergence, "Gamma does not annihilate kernel mode " + std::to_string(j) +
                                      "; the infinite-time integral diverges");
    }
  }
  return projected;
}

FunctionalField finish(const OperatorBundle& b, const SpectralDecomposition& dec,
                       const FunctionalSpec& spec, const std::vector<Field>& f_list,
                       ChannelSquares sq) {
  FunctionalField out;
  const auto n = static_cast<Eigen::Index>(b.dim());
  out.gradient_part = sq.gradient.size() ? Field(sq.gradient.cwiseMax(0.0).cwiseSqrt()) : Field::Zero(n);
  out.potential_part = sq.potential.size() ? Field(sq.potential.cwiseMax(0.0).cwiseSqrt()) : Field::Zero(n);
  out.kernel_projected = sq.projected;
  switch (spec.gamma) {
    case Gamma::Gradient: out.value = out.gradient_part; break;
    case Gamma::Potential: out.value = out.potential_part; break;
    case Gamma::Both:
      out.value = spec.combine == ChannelCombination::Sum
                      ? Field(out.gradient_part + out.potential_part)
                      : Field((out.gradient_part.array().square() + out.potential_part.array().square()).sqrt());
      break;
  }
  out.semigroup_part = Field::Zero(n);
  if (spec.kind == FunctionalKind::Q) {
    out.semigroup_part = heat(dec, 1.0, f_list.front()).cwiseAbs();
    out.value += out.semigroup_part;
  }
  return out;
}

void check_inputs(const OperatorBundle& b, const SpectralDecomposition& dec, const FunctionalSpec& spec,
                  const std::vector<Field>& f_list) {
  require(dec.size() == b.dim(), ErrorCode::InvalidArgument, "decomposition does not match bundle");
  require(f_list.size() == spec.n_terms(), ErrorCode::InvalidArgument,
          "f_list has " + std::to_string(f_list.size()) + " entries, spec has " +
              std::to_string(spec.n_terms()) + " multiplier terms");
  require(spec.kind != FunctionalKind::G || !spec.multipliers.empty(), ErrorCode::InvalidArgument,
          "kind G needs explicit multipliers m_k");
  require(spec.kind != FunctionalKind::Q || f_list.size() == 1, ErrorCode::InvalidArgument,
          "kind Q takes a single function");
  for (const auto& f : f_list)
    require(f.size() == static_cast<Eigen::Index>(b.dim()), ErrorCode::InvalidArgument,
            "function size does not match bundle");
}

}  // namespace

FunctionalField lps_quadrature(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                               const FunctionalSpec& spec, const std::vector<Field>& f_list,
                               const TimeGrid& grid) {
  check_inputs(bundle, dec, spec, f_list);
  const auto n = static_cast<Eigen::Index>(bundle.dim());
  const bool want_g = needs_gradient(spec.gamma);
  const bool want_p = needs_potential(spec.gamma) && !bundle.potential_vanishes();
  ChannelSquares sq;
  sq.gradient = Field::Zero(n);
  sq.potential = Field::Zero(n);
  Field edge_acc = Field::Zero(static_cast<Eigen::Index>(bundle.edges().size()));
  const auto inc = incidence(bundle);
  const bool has_killing = bundle.killing().cwiseAbs().maxCoeff() > 0.0;

  constexpr Eigen::Index kBlock = 96;
  const auto T = static_cast<Eigen::Index>(grid.size());
  for (std::size_t k = 0; k < f_list.size(); ++k) {
    Eigen::VectorXd c = dec.coefficients(f_list[k]);
    sq.projected = handle_kernel(bundle, dec, spec, c) || sq.projected;
    // Modes with zero coefficient contribute nothing; compress them away.
    std::vector<Eigen::Index> live;
    for (Eigen::Index j = 0; j < c.size(); ++j)
      if (c[j] != 0.0) live.push_back(j);
    if (live.empty()) continue;
    const auto L = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd phi(n, L);
    for (Eigen::Index j = 0; j < L; ++j) phi.col(j) = dec.eigenvectors.col(live[static_cast<std::size_t>(j)]);

    for (Eigen::Index i0 = 0; i0 < T; i0 += kBlock) {
      const Eigen::Index B = std::min(kBlock, T - i0);
      Eigen::MatrixXd A(L, B);
      for (Eigen::Index i = 0; i < B; ++i) {
        const double t = grid.nodes[static_cast<std::size_t>(i0 + i)];
        const double sw = std::sqrt(grid.weights[static_cast<std::size_t>(i0 + i)]);
        for (Eigen::Index j = 0; j < L; ++j) {
          const auto J = live[static_cast<std::size_t>(j)];
          A(j, i) = c[J] * spec.profile(k, t, dec.eigenvalues[J]) * sw;
        }
      }
      const Eigen::MatrixXd U = phi * A;
      const Eigen::VectorXd node_sq = U.rowwise().squaredNorm();
      if (want_g) {
        if (inc.rows() > 0) edge_acc += (inc * U).rowwise().squaredNorm();
        if (has_killing) sq.gradient.array() += bundle.killing().array() * node_sq.array();
      }
      if (want_p) sq.potential.array() += bundle.potential().array() * node_sq.array();
    }
  }
  if (want_g) {
    for (std::size_t e = 0; e < bundle.edges().size(); ++e) {
      const auto& ed = bundle.edges()[e];
      const double v = 0.5 * ed.conductance * edge_acc[static_cast<Eigen::Index>(e)];
      sq.gradient[static_cast<Eigen::Index>(ed.u)] += v;
      sq.gradient[static_cast<Eigen::Index>(ed.v)] += v;
    }
    sq.gradient = sq.gradient.cwiseQuotient(bundle.measure());
  }
  return finish(bundle, dec, spec, f_list, sq);
}

FunctionalField lps_quadrature(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                               const FunctionalSpec& spec, const std::vector<Field>& f_list) {
  return lps_quadrature(bundle, dec, spec, f_list, TimeGrid::for_spec(dec, spec));
}

// ---------------------------------------------------------------------------
// Gram oracle

namespace {

// int_a^b t^m e^{-s t} dt for m in {0, 2}; b may be +inf.
double moment_integral(int m, double s, double a, double b) {
  const bool inf = !std::isfinite(b);
  if (s <= 0.0) {
    if (inf) return std::numeric_limits<double>::infinity();
    return (std::pow(b, m + 1) - std::pow(a, m + 1)) / (m + 1);
  }
  if (m == 0) {
    if (inf) return std::exp(-s * a) / s;
    return std::exp(-s * a) * (-std::expm1(-s * (b - a))) / s;
  }
  // m == 2
  if (!inf && s * b < 0.05) {
    double total = 0.0, term = 1.0;
    for (int q = 0; q < 40; ++q) {
      if (q > 0) term *= -s / q;
      total += term * (std::pow(b, q + 3) - std::pow(a, q + 3)) / (q + 3);
    }
    return total;
  }
  auto prim = [s](double t) { return std::exp(-s * t) * (t * t / s + 2.0 * t / (s * s) + 2.0 / (s * s * s)); };
  return prim(a) - (inf ? 0.0 : prim(b));
}

struct ModeProfile {
  Eigen::VectorXd amplitude;  // A_j
  Eigen::VectorXd rate;       // beta_j
  int power = 0;              // profile = A_j (t lambda_j)^r e^{-t beta_j}, power = r
};

ModeProfile exponential_profile(const FunctionalSpec& spec, std::size_t k, const SpectralDecomposition& dec) {
  const auto n = static_cast<Eigen::Index>(dec.size());
  ModeProfile mp;
  mp.amplitude.resize(n);
  mp.rate.resize(n);
  const MultiplierFunction* shape = nullptr;
  double mk_scale = 1.0;
  bool mk_on_lambda = false;
  if (spec.kind == FunctionalKind::G) {
    shape = &spec.multipliers.at(k);
  } else if (spec.kind == FunctionalKind::HF) {
    shape = &spec.outer;
    mk_on_lambda = true;
  } else {
    mk_on_lambda = true;
  }
  double amp = 1.0, dil = 1.0;
  if (shape) {
    amp = shape->amplitude();
    dil = shape->dilation();
    mp.power = shape->kind() == MultiplierFunction::Kind::ZExp ? 1 : 0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lam = std::max(dec.eigenvalues[j], 0.0);
    double a = amp * std::pow(dil, mp.power) * mk_scale;
    if (mk_on_lambda && !spec.multipliers.empty()) a *= spec.multipliers.at(k)(lam);
    mp.amplitude[j] = a * std::pow(lam, mp.power);
    mp.rate[j] = dil * lam;
  }
  return mp;
}

}  // namespace

FunctionalField lps_exact_gram(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                               const FunctionalSpec& spec, const std::vector<Field>& f_list,
                               std::size_t oracle_cap) {
  check_inputs(bundle, dec, spec, f_list);
  require(bundle.dim() <= oracle_cap, ErrorCode::ResourceLimit,
          "Gram oracle is capped at " + std::to_string(oracle_cap) + " vertices");
  require(spec.exponential_type(), ErrorCode::Unsupported,
          "Gram oracle needs exponential-type outer functions (" + spec.describe() + ")");
  const auto n = static_cast<Eigen::Index>(bundle.dim());
  const auto [a, b] = spec.interval();
  const bool want_g = needs_gradient(spec.gamma);
  const bool want_p = needs_potential(spec.gamma) && !bundle.potential_vanishes();

  ChannelSquares sq;
  sq.gradient = Field::Zero(n);
  sq.potential = Field::Zero(n);
  const auto inc = incidence(bundle);

  for (std::size_t k = 0; k < f_list.size(); ++k) {
    Eigen::VectorXd c = dec.coefficients(f_list[k]);
    sq.projected = handle_kernel(bundle, dec, spec, c) || sq.projected;
    const ModeProfile mp = exponential_profile(spec, k, dec);
    const Eigen::VectorXd coef = c.cwiseProduct(mp.amplitude);

    std::vector<Eigen::Index> live;
    for (Eigen::Index j = 0; j < n; ++j)
      if (coef[j] != 0.0) live.push_back(j);
    if (live.empty()) continue;
    const auto L = static_cast<Eigen::Index>(live.size());

    Eigen::MatrixXd K(L, L);
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < L; ++j) {
        const double s = mp.rate[live[static_cast<std::size_t>(i)]] + mp.rate[live[static_cast<std::size_t>(j)]];
        const double v = moment_integral(2 * mp.power, s, a, b);
        if (std::isinf(v))
          fail(ErrorCode::Divergence, "zero exponent with non-zero Gram entry in " + spec.describe());
        K(i, j) = v;
      }
    }
    // Phi restricted to live modes and scaled by the coefficients.
    Eigen::MatrixXd P(n, L);
    for (Eigen::Index j = 0; j < L; ++j)
      P.col(j) = coef[live[static_cast<std::size_t>(j)]] * dec.eigenvectors.col(live[static_cast<std::size_t>(j)]);

    const Eigen::MatrixXd PK = P * K;
    const Eigen::VectorXd node_q = (PK.array() * P.array()).rowwise().sum();
    if (want_g) {
      if (inc.rows() > 0) {
        const Eigen::MatrixXd D = inc * P;
        const Eigen::VectorXd edge_q = ((D * K).array() * D.array()).rowwise().sum();
        for (std::size_t e = 0; e < bundle.edges().size(); ++e) {
          const auto& ed = bundle.edges()[e];
          const double v = 0.5 * ed.conductance * edge_q[static_cast<Eigen::Index>(e)];
          sq.gradient[static_cast<Eigen::Index>(ed.u)] += v / bundle.measure()[static_cast<Eigen::Index>(ed.u)];
          sq.gradient[static_cast<Eigen::Index>(ed.v)] += v / bundle.measure()[static_cast<Eigen::Index>(ed.v)];
        }
      }
      sq.gradient.array() += bundle.killing().array() * node_q.array() / bundle.measure().array();
    }
    if (want_p) sq.potential.array() += bundle.potential().array() * node_q.array();
  }
  return finish(bundle, dec, spec, f_list, sq);
}

// ---------------------------------------------------------------------------
// Estimator

std::uint64_t field_hash(const Field& f) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const auto v = std::bit_cast<std::uint64_t>(f[i]);
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

NormEstimate estimate_functional_norm(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                      const FunctionalSpec& spec, double p, std::size_t budget,
                                      std::uint64_t seed, const EstimatorOptions& opts) {
  require(budget >= 1, ErrorCode::InvalidArgument, "estimator budget must be >= 1");
  require(std::isfinite(p) && p > 1.0, ErrorCode::InvalidArgument, "p must lie in (1, inf)");
  const TimeGrid grid = TimeGrid::for_spec(dec, spec, opts.time_nodes);
  ProbeBattery battery(bundle, dec, seed);
  NormEstimate est;
  est.seed = seed;
  est.budget = budget;
  bool have_best = false;
  std::size_t ascent_steps = 0, next_probe = 0;
  for (std::size_t i = 0; i < budget; ++i) {
    // Every fourth step perturbs the current witness; the battery index only
    // advances on battery steps so no probe type is starved.
    const bool ascent = have_best && i % 4 == 3;
    Probe probe = ascent ? battery.perturb(est.witness, ascent_steps++) : battery(next_probe++);
    const double denom = lp_norm(bundle.measure(), probe.f, p);
    double ratio = 0.0;
    if (denom > 0.0) {
      try {
        std::vector<Field> fl(spec.n_terms(), probe.f);
        const auto val = lps_quadrature(bundle, dec, spec, fl, grid);
        ratio = lp_norm(bundle.measure(), val.value, p) / denom;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Divergence) throw;
        ++est.divergent_probes;
        est.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
        est.labels.push_back(probe.label + ":divergent");
        continue;
      }
    }
    est.ratios.push_back(ratio);
    est.labels.push_back(probe.label);
    if (!have_best || ratio > est.constant) {
      est.constant = ratio;
      est.witness = probe.f;
      est.witness_label = probe.label;
      have_best = true;
    }
  }
  if (est.divergent_probes == budget)
    fail(ErrorCode::Divergence, "every probe diverged for " + spec.describe());
  est.witness_hash = field_hash(est.witness);
  return est;
}

void write_functional_csv(std::ostream& os, const OperatorBundle& bundle, const Field& values) {
  const auto pos = bundle.active_positions();
  const std::size_t dims = pos.empty() ? 0 : pos.front().size();
  os << "vertex";
  for (std::size_t k = 0; k < dims; ++k) os << ",x" << k;
  os << ",value\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < bundle.dim(); ++i) {
    os << bundle.active_vertices()[i];
    for (std::size_t k = 0; k < dims; ++k) os << ',' << pos[i][k];
    os << ',' << values[static_cast<Eigen::Index>(i)] << '\n';
  }
}

}  // namespace lps
