#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "lps/bundle.hpp"
#include "lps/spectral.hpp"

namespace lps {

/// trials x k matrix of independent +-1 entries, reproducible from `seed`.
Eigen::MatrixXd rademacher_sample(std::size_t k, std::size_t trials, std::uint64_t seed);

/// A one-parameter family T_t = Gamma o s(t, L), where s is a scalar profile
/// applied through the spectral calculus. Without Gamma the family acts by
/// s(t, L) and the pointwise norm is |.|.
struct OperatorFamily {
  std::string label;
  bool apply_gamma = true;
  Gamma gamma = Gamma::Both;
  std::function<double(double t, double lambda)> profile;
  std::pair<double, double> domain{0.0, 1e300};  ///< closed except a 0 lower end

  /// Pre-Gamma field s(t, L) f.
  Field pre_gamma(const SpectralDecomposition& dec, double t, const Field& f) const;
  /// |T_t u|^2 pointwise for a pre-Gamma field u.
  Field pointwise_squared(const OperatorBundle& b, const Field& u) const;
  bool contains(double t) const;

  /// {sqrt(t) Gamma e^{-tL} : t > 0}
  static OperatorFamily heat_gradient(Gamma g = Gamma::Both);
  /// {sqrt(t) Gamma (I + tL)^{-delta'} : t > 0}
  static OperatorFamily resolvent(double delta_prime, Gamma g = Gamma::Both);
  /// {sqrt(t) Gamma e^{-tL} : 0 < t <= 1}
  static OperatorFamily local(Gamma g = Gamma::Both);
  /// {sqrt(t - 1) Gamma e^{-tL} : t >= 1}
  static OperatorFamily infinity(Gamma g = Gamma::Both);
  static OperatorFamily identity();
  static OperatorFamily scaled_identity(double c);
  /// Looks a preset up by name: heat-gradient, resolvent, local, infinity,
  /// identity.
  static OperatorFamily by_name(const std::string& name, Gamma g = Gamma::Both);
};

enum class RFormulation { Expectation, SquareFunction, L2Valued };
std::string to_string(RFormulation f);

struct RBoundEstimate {
  std::vector<double> ratio_samples;
  double empirical_constant = 0.0;  ///< max of ratio_samples
  double mean_ratio = 0.0;
  /// (E||sum r T f||_p^2 / E||sum r f||_p^2)^{1/2}; recorded by the
  /// expectation form only (exactly the square form at p = 2).
  double second_moment_ratio = 0.0;
  double p = 2.0;
  RFormulation formulation = RFormulation::SquareFunction;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::string family;
  std::vector<std::string> sample_labels;
};

/// Fixed histogram layout for serialized estimates: 40 bins of width 0.05 on
/// [0, 2) followed by one overflow bin [2, inf).
inline constexpr std::size_t kHistogramBins = 41;
inline constexpr double kHistogramWidth = 0.05;
std::vector<std::size_t> ratio_histogram(const std::vector<double>& ratios);
nlohmann::json to_json(const RBoundEstimate& e);

/// Monte-Carlo expectation form: E||sum_k r_k T_k f_k||_p / E||sum_k r_k f_k||_p.
/// The trials are split into batches; each batch ratio is one sample and the
/// mean ratio uses all trials. With a single member no signs are drawn.
RBoundEstimate rbound_ratio_expectation(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                        const OperatorFamily& family, double p,
                                        const std::vector<double>& t_list,
                                        const std::vector<Field>& f_list, std::size_t trials,
                                        std::uint64_t seed, std::size_t batches = 10);

/// Same quantity evaluated exactly by enumerating all 2^k sign vectors
/// (k <= 20). `moment` 1 gives the first-moment form, 2 the second-moment form.
double rbound_ratio_expectation_exact(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                      const OperatorFamily& family, double p,
                                      const std::vector<double>& t_list,
                                      const std::vector<Field>& f_list, int moment = 1);

/// ||(sum_k |T_k f_k|^2)^{1/2}||_p / ||(sum_k |f_k|^2)^{1/2}||_p.
RBoundEstimate rbound_ratio_square(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                   const OperatorFamily& family, double p,
                                   const std::vector<double>& t_list, const std::vector<Field>& f_list);

/// ||(int |S_t u(t)|^2 dt)^{1/2}||_p / ||(int |u(t)|^2 dt)^{1/2}||_p with the
/// t-integral replaced by the given nodes and weights; u[i] is u(t_nodes[i]).
double rbound_l2valued(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                       const OperatorFamily& family, double p, const std::vector<Field>& u,
                       const std::vector<double>& t_nodes, const std::vector<double>& t_weights);

/// Running max of the square-form ratio over randomized inputs with k <= k_max:
/// random t, geometric ladders 4^j / lambda_max, t near 0, t near the
/// spectral-gap scale and eigenvector slices paired with t = 1/(2 lambda_j).
RBoundEstimate estimate_rbound_constant(const OperatorBundle& bundle, const SpectralDecomposition& dec,
                                        const OperatorFamily& family, double p, std::size_t budget,
                                        std::size_t k_max, std::uint64_t seed);

}  // namespace lps
