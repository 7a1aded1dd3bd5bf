#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>

#include <Eigen/Core>

#include "lps/bundle.hpp"
#include "lps/multiplier.hpp"

namespace lps {

/// Default vertex cap for dense eigensolves; overridable through the
/// LPS_VERTEX_CAP environment variable.
inline constexpr std::size_t kDefaultVertexCap = 4000;
std::size_t vertex_cap_from_env();

/// Spectral resolution of L: ascending eigenvalues and eigenvectors that are
/// orthonormal in the mu-weighted inner product.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  ///< column j is phi_j
  Field measure;
  std::size_t kernel_dim = 0;
  double kernel_tolerance = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double lambda_max() const { return eigenvalues.size() ? eigenvalues[eigenvalues.size() - 1] : 0.0; }
  /// Smallest eigenvalue above the kernel tolerance (0 if none).
  double lambda_min_positive() const;
  bool in_kernel(std::size_t j) const { return j < kernel_dim; }

  /// <f, phi_j>_mu for all j.
  Eigen::VectorXd coefficients(const Field& f) const;
  Field synthesize(const Eigen::VectorXd& c) const;
  /// f minus its kernel component.
  Field project_off_kernel(const Field& f) const;
};

/// Dense symmetric eigensolve (LAPACK dsyevd on M^{-1/2} K M^{-1/2}).
/// Throws Error(ResourceLimit) when dim() exceeds `vertex_cap`.
SpectralDecomposition decompose(const OperatorBundle& bundle,
                                std::size_t vertex_cap = vertex_cap_from_env(),
                                double kernel_rel_tol = 1e-10);

/// m(L) f = sum_j m(lambda_j) <f, phi_j> phi_j. Where m is undefined at a
/// kernel eigenvalue the component is dropped if `project_kernel` is set,
/// otherwise Error(KernelCollision) is thrown.
Field apply_function(const SpectralDecomposition& dec, const MultiplierFunction& m, const Field& f,
                     bool project_kernel = false);

/// Same, with an arbitrary scalar profile of lambda.
Field apply_profile(const SpectralDecomposition& dec, const std::function<double(double)>& m,
                    const Field& f);

Field heat(const SpectralDecomposition& dec, double t, const Field& f);
Field poisson(const SpectralDecomposition& dec, double t, const Field& f);
Field inverse_sqrt(const SpectralDecomposition& dec, const Field& f, bool project_kernel);
Field sqrt_operator(const SpectralDecomposition& dec, const Field& f);
/// (I + tL)^{-delta'} f. delta' <= 1/2 needs `allow_any_exponent`.
Field resolvent_power(const SpectralDecomposition& dec, double t, double delta_prime, const Field& f,
                      bool allow_any_exponent = false);

/// Poisson semigroup through the subordination formula
///   e^{-t sqrt(L)} = int_0^inf t/(2 sqrt(pi)) s^{-3/2} e^{-t^2/(4s)} e^{-sL} ds,
/// evaluated by quadrature in log s. Independent of poisson().
Field poisson_by_subordination(const SpectralDecomposition& dec, double t, const Field& f);

/// Decomposition cache keyed by the bundle's content hash. Layout (little
/// endian): magic "LPSDEC01", u64 hash, u64 n, u64 kernel_dim, f64
/// kernel_tolerance, n f64 eigenvalues, n f64 measure, n*n f64 eigenvectors
/// (column major).
class DecompositionCache {
public:
  explicit DecompositionCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const OperatorBundle& bundle) const;
  std::optional<SpectralDecomposition> load(const OperatorBundle& bundle) const;
  void store(const OperatorBundle& bundle, const SpectralDecomposition& dec) const;
  SpectralDecomposition get(const OperatorBundle& bundle,
                            std::size_t vertex_cap = vertex_cap_from_env()) const;

private:
  std::filesystem::path dir_;
};

}  // namespace lps
