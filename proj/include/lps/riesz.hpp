#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lps/bundle.hpp"
#include "lps/spectral.hpp"

namespace lps {

/// full: Gamma L^{-1/2}; local: Gamma (L + I)^{-1/2}; infinity: Gamma L^{-1/2} e^{-L}.
enum class RieszKind { Full, Local, Infinity };
std::string to_string(RieszKind k);
RieszKind riesz_kind_from_string(const std::string& s);

/// The scalar multiplier of each kind (before Gamma), on [0, inf).
double riesz_multiplier(RieszKind kind, double lambda);

/// Pre-Gamma field of the transform. Full and infinity kinds drop the kernel
/// component when `project_kernel` is set and throw Error(KernelCollision)
/// on a non-zero kernel component otherwise.
Field riesz_potential(const SpectralDecomposition& dec, RieszKind kind, const Field& f,
                      bool project_kernel = true);

/// |Gamma T f|(x).
Field riesz_apply(const OperatorBundle& bundle, const SpectralDecomposition& dec, RieszKind kind,
                  const Field& f, Gamma gamma = Gamma::Both, bool project_kernel = true);

struct RieszReport {
  RieszKind kind = RieszKind::Full;
  Gamma gamma = Gamma::Both;
  double p = 2.0;
  double norm = 0.0;  ///< empirical lower bound on ||T||_{p->p}
  Field witness;
  std::string witness_label;
  std::size_t kernel_dim = 0;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::vector<double> ratios;
  /// p = 2 only: the exact bound 1 and whether the estimate respects it.
  bool exact_bound_applies = false;
  double exact_bound = 1.0;
  bool within_exact_bound = true;
};

RieszReport estimate_riesz_norm(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                RieszKind kind, double p, std::size_t budget, std::uint64_t seed,
                                Gamma gamma = Gamma::Both);

struct ChenReport {
  double p = 2.0;
  std::size_t probes = 0;
  double max_violation = 0.0;  ///< max of LHS - RHS (<= 1e-9 expected)
  double max_lhs_ratio = 0.0;
  double phi_sup = 0.0;        ///< sup of phi over the non-zero spectrum
  double phi_at_lambda_max = 0.0;
  double phi_at_lambda_min = 0.0;
};

/// phi(z) = sqrt(z + 1)(1 - e^{-z}) / sqrt(z).
double chen_phi(double z);

/// ||Gamma L^{-1/2} f||_p against ||Gamma L^{-1/2} e^{-L} f||_p +
/// ||Gamma (L+I)^{-1/2} phi(L) f||_p over probe functions.
ChenReport chen_decomposition_check(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                    double p, std::size_t budget, std::uint64_t seed,
                                    Gamma gamma = Gamma::Gradient);

struct MultiplicativeReport {
  double p = 2.0;
  double max_ratio = 0.0;  ///< ||Gamma f||_p^2 / (||L f||_p ||f||_p)
  std::size_t probes = 0;
  std::size_t skipped = 0;
  std::string witness_label;
};

MultiplicativeReport multiplicative_inequality_check(const OperatorBundle& bundle,
                                                     const SpectralDecomposition& dec, double p,
                                                     std::size_t budget, std::uint64_t seed,
                                                     Gamma gamma = Gamma::Both);

}  // namespace lps
