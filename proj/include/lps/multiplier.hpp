#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lps {

/// How |m(s)|^2 decays as s -> infinity; drives the analytic tail added
/// beyond the last quadrature node.
struct Decay {
  enum class Kind { Compact, Exponential, StretchedExponential, Power, None };
  Kind kind = Kind::None;
  double rate = 0.0;  ///< Exponential: |m|^2 ~ e^{-rate s}; Power: |m|^2 ~ s^{-rate}
};

/// Scalar function applied to the spectrum of L. Self-adjointness puts the
/// spectrum on [0, lambda_max], so multipliers are only ever evaluated there;
/// sector angles from the holomorphic calculus have no role here.
class MultiplierFunction {
public:
  enum class Kind {
    Constant,
    Exp,             // e^{-z}
    ZExp,            // z e^{-z}
    Poisson,         // e^{-sqrt z}
    ResolventPower,  // (1 + z)^{-delta'}
    Bump,            // C-infinity bump supported in [1/2, 2]
    Triangle,        // piecewise-linear hat on [1/2, 2], peak at 5/4
    Tabulated,       // uniform samples on [a, b], linear interpolation, 0 outside
    Power,           // z^s (undefined at 0 when s < 0)
    Custom,
  };

  static MultiplierFunction constant(double c);
  static MultiplierFunction exp_decay();
  static MultiplierFunction z_exp();
  static MultiplierFunction poisson();
  /// delta' > 1/2 is enforced unless `allow_any` is set.
  static MultiplierFunction resolvent_power(double delta_prime, bool allow_any = false);
  static MultiplierFunction bump();
  static MultiplierFunction triangle();
  static MultiplierFunction tabulated(double a, double b, std::vector<double> samples);
  static MultiplierFunction power(double s);
  static MultiplierFunction custom(std::string label, std::function<double(double)> fn,
                                   Decay decay = {},
                                   std::optional<std::pair<double, double>> support = std::nullopt);

  /// z -> scale * m(z); keeps kind metadata.
  MultiplierFunction times(double scale) const;
  /// z -> m(t z).
  MultiplierFunction dilated(double t) const;

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  double parameter() const { return param_; }
  double amplitude() const { return amplitude_; }
  double dilation() const { return dilation_; }
  const std::vector<double>& samples() const { return samples_; }
  std::pair<double, double> tabulation_interval() const { return {a_, b_}; }

  bool defined_at(double z) const;
  /// Throws Error(KernelCollision) where undefined (e.g. z^{-1/2} at 0).
  double operator()(double z) const;

  /// Support of m as a function of z, when compact.
  std::optional<std::pair<double, double>> support() const;
  Decay decay() const;

  /// True for e^{-z} and z e^{-z}: the t-integrals these produce have closed
  /// forms, which the Gram oracle relies on.
  bool exponential_type() const { return (kind_ == Kind::Exp || kind_ == Kind::ZExp); }

private:
  double eval_unit(double z) const;

  Kind kind_ = Kind::Constant;
  std::string label_ = "1";
  double param_ = 0.0;
  double amplitude_ = 1.0;
  double dilation_ = 1.0;
  double a_ = 0.0, b_ = 0.0;
  std::vector<double> samples_;
  std::shared_ptr<const std::function<double(double)>> fn_;
  Decay custom_decay_;
  std::optional<std::pair<double, double>> custom_support_;
};

/// Uniform tabulation of m on [a, b] with n samples.
MultiplierFunction tabulate(const MultiplierFunction& m, double a, double b, std::size_t n);

/// (int (1 + |xi|^2)^delta |m^(xi)|^2 dxi)^{1/2} with the unitary angular
/// Fourier transform, computed by FFT of the tabulation after zero padding to
/// `padding` times its length. Frequency sums are rectangle rules on the DFT
/// grid (the trapezoid rule for a periodic integrand). `resolution` > 0
/// resamples m at that many points first. Throws Error(InvalidArgument) when
/// m is not a tabulated function vanishing at both ends of its interval.
double sobolev_norm(const MultiplierFunction& m, double delta, std::size_t resolution = 0,
                    std::size_t padding = 4);

/// int_lo^hi |m(s)|^2 ds by adaptive Simpson (hi may be +inf for decaying m).
double l2_norm_squared(const MultiplierFunction& m, double lo = 0.0,
                       double hi = std::numeric_limits<double>::infinity());

}  // namespace lps
