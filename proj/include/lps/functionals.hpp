#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lps/bundle.hpp"
#include "lps/multiplier.hpp"
#include "lps/spectral.hpp"

namespace lps {

/// H: (sum_k int_0^inf |Gamma m_k(L) e^{-tL} f_k|^2 dt)^{1/2}
/// HF: same with a general outer F(tL) in place of e^{-tL}
/// G: (sum_k int_0^inf |Gamma m_k(tL) f_k|^2 dt)^{1/2}
/// HLoc / HInf: H restricted to t in (0,1] / [1,inf)
/// Q: |e^{-L} f| + HLoc(f)
enum class FunctionalKind { H, HF, G, HLoc, HInf, Q };

std::string to_string(FunctionalKind k);
FunctionalKind functional_kind_from_string(const std::string& s);

/// How the gradient and sqrt(V) channels are combined when both are
/// requested: Sum adds the two square functions (the displayed H), L2 takes
/// the root of the sum of squares (for which the p = 2 identities are exact).
enum class ChannelCombination { Sum, L2 };

std::string to_string(ChannelCombination c);

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::H;
  Gamma gamma = Gamma::Gradient;
  ChannelCombination combine = ChannelCombination::Sum;
  /// m_k; empty means the single multiplier m = 1 (not allowed for G).
  std::vector<MultiplierFunction> multipliers;
  /// F for H-type kinds (fixed to e^{-z} for H, HLoc, HInf, Q).
  MultiplierFunction outer = MultiplierFunction::exp_decay();

  static FunctionalSpec of(FunctionalKind kind, Gamma gamma = Gamma::Gradient,
                           ChannelCombination combine = ChannelCombination::Sum);

  std::size_t n_terms() const { return multipliers.empty() ? 1 : multipliers.size(); }
  /// Integration interval in t; the upper end may be +inf.
  std::pair<double, double> interval() const;
  /// t-profile of term k at eigenvalue lambda.
  double profile(std::size_t k, double t, double lambda) const;
  /// Gram oracle applies: exponential outer function (or none) on every term.
  bool exponential_type() const;
  std::string describe() const;
};

/// Nodes and positive weights approximating int over the spec's t-interval.
/// Composite Simpson in log t on [t_lo, t_hi] (odd node count); intervals
/// [a, inf) with a > 0 are log-spaced in t - a instead. The head next to the
/// left end is folded into the first weight as a rectangle; the tail beyond
/// t_hi is folded into the last weight from the analytic decay of the outer
/// function at the spectral gap (e^{-2 lambda_min+ t} for exponential
/// profiles).
struct TimeGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double head = 0.0;
  double tail_factor = 0.0;
  std::string tail_policy = "none";

  /// Defaults: t_min = 1e-6 / lambda_max, t_max = 40 / lambda_min+ (scaled
  /// for slower decays), 400 requested nodes (rounded up to odd).
  static TimeGrid for_spec(const SpectralDecomposition& dec, const FunctionalSpec& spec,
                           std::size_t nodes = 400);
  /// Simpson in log t over [a, b] without head or tail.
  static TimeGrid log_simpson(double a, double b, std::size_t nodes);

  std::size_t size() const { return nodes.size(); }
};

struct FunctionalField {
  Field value;           ///< the functional, per active vertex
  Field gradient_part;   ///< gradient channel, already square-rooted
  Field potential_part;  ///< sqrt(V) channel, already square-rooted
  Field semigroup_part;  ///< |e^{-L} f| for Q, zero otherwise
  bool kernel_projected = false;
};

/// sum_x mu(x) |f(x)|^p to the 1/p (p >= 1 finite).
double lp_norm(const Field& measure, const Field& f, double p);
double lp_norm(const OperatorBundle& b, const Field& f, double p);

/// || (sum_k |f_k|^2)^{1/2} ||_p.
double sequence_rhs_norm(const Field& measure, const std::vector<Field>& f_list, double p);

/// Quadrature evaluation of the functional. `f_list` has one function per
/// multiplier term. Kernel modes with non-zero coefficients are dropped when
/// Gamma annihilates them; a kernel mode Gamma does not annihilate makes an
/// infinite-time integral diverge and raises Error(Divergence).
FunctionalField lps_quadrature(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                               const FunctionalSpec& spec, const std::vector<Field>& f_list,
                               const TimeGrid& grid);
FunctionalField lps_quadrature(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                               const FunctionalSpec& spec, const std::vector<Field>& f_list);

/// Closed-form oracle: expands Gamma m(tL) f in eigenvectors and integrates
/// each c_j c_k e^{-t(lambda_j + lambda_k)} term exactly. Only exponential-type
/// specs; throws Error(ResourceLimit) above `oracle_cap` vertices.
FunctionalField lps_exact_gram(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                               const FunctionalSpec& spec, const std::vector<Field>& f_list,
                               std::size_t oracle_cap = 400);

/// Running maximum of ||spec(f)||_p / ||f||_p over a deterministic probe
/// sequence plus greedy sign-flip ascent. A lower bound on the operator norm,
/// never more.
struct NormEstimate {
  double constant = 0.0;
  Field witness;
  std::string witness_label;
  std::uint64_t witness_hash = 0;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t divergent_probes = 0;
  std::vector<double> ratios;
  std::vector<std::string> labels;
};

struct EstimatorOptions {
  std::size_t time_nodes = 400;
};

NormEstimate estimate_functional_norm(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                      const FunctionalSpec& spec, double p, std::size_t budget,
                                      std::uint64_t seed, const EstimatorOptions& opts = {});

/// FNV-1a over the exact bits of a field.
std::uint64_t field_hash(const Field& f);

/// CSV: vertex,<x0..>,value (positions omitted when absent). Column order
/// frozen.
void write_functional_csv(std::ostream& os, const OperatorBundle& bundle, const Field& values);

}  // namespace lps
