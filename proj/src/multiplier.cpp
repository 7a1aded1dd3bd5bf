#include "lps/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lps/error.hpp"

namespace lps {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  // Split into panels so narrow features are not stepped over.
  const int panels = 64;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double x0 = a + (b - a) * i / panels;
    const double x1 = a + (b - a) * (i + 1) / panels;
    const double f0 = f(x0), f1 = f(x1), fm = f(0.5 * (x0 + x1));
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += adaptive_simpson(f, x0, x1, f0, fm, f1, whole, tol / panels, 40);
  }
  return total;
}

}  // namespace

MultiplierFunction MultiplierFunction::constant(double c) {
  MultiplierFunction m;
  m.kind_ = Kind::Constant;
  m.amplitude_ = c;
  m.label_ = fmt(c);
  return m;
}

MultiplierFunction MultiplierFunction::exp_decay() {
  MultiplierFunction m;
  m.kind_ = Kind::Exp;
  m.label_ = "exp(-z)";
  return m;
}

MultiplierFunction MultiplierFunction::z_exp() {
  MultiplierFunction m;
  m.kind_ = Kind::ZExp;
  m.label_ = "z*exp(-z)";
  return m;
}

MultiplierFunction MultiplierFunction::poisson() {
  MultiplierFunction m;
  m.kind_ = Kind::Poisson;
  m.label_ = "exp(-sqrt(z))";
  return m;
}

MultiplierFunction MultiplierFunction::resolvent_power(double delta_prime, bool allow_any) {
  require(std::isfinite(delta_prime) && delta_prime > 0.0, ErrorCode::InvalidArgument,
          "resolvent exponent must be positive");
  require(allow_any || delta_prime > 0.5, ErrorCode::InvalidArgument,
          "resolvent exponent delta' must exceed 1/2 (got " + fmt(delta_prime) + ")");
  MultiplierFunction m;
  m.kind_ = Kind::ResolventPower;
  m.param_ = delta_prime;
  m.label_ = "(1+z)^-" + fmt(delta_prime);
  return m;
}

MultiplierFunction MultiplierFunction::bump() {
  MultiplierFunction m;
  m.kind_ = Kind::Bump;
  m.label_ = "bump[1/2,2]";
  return m;
}

MultiplierFunction MultiplierFunction::triangle() {
  MultiplierFunction m;
  m.kind_ = Kind::Triangle;
  m.label_ = "triangle[1/2,2]";
  return m;
}

MultiplierFunction MultiplierFunction::tabulated(double a, double b, std::vector<double> samples) {
  require(b > a && samples.size() >= 2, ErrorCode::InvalidArgument,
          "tabulation needs b > a and at least two samples");
  MultiplierFunction m;
  m.kind_ = Kind::Tabulated;
  m.a_ = a;
  m.b_ = b;
  m.samples_ = std::move(samples);
  m.label_ = "tabulated[" + fmt(a) + "," + fmt(b) + "]";
  return m;
}

MultiplierFunction MultiplierFunction::power(double s) {
  MultiplierFunction m;
  m.kind_ = Kind::Power;
  m.param_ = s;
  m.label_ = "z^" + fmt(s);
  return m;
}

MultiplierFunction MultiplierFunction::custom(std::string label, std::function<double(double)> fn,
                                              Decay decay,
                                              std::optional<std::pair<double, double>> support) {
  MultiplierFunction m;
  m.kind_ = Kind::Custom;
  m.label_ = std::move(label);
  m.fn_ = std::make_shared<const std::function<double(double)>>(std::move(fn));
  m.custom_decay_ = decay;
  m.custom_support_ = support;
  return m;
}

MultiplierFunction MultiplierFunction::times(double scale) const {
  MultiplierFunction m = *this;
  m.amplitude_ *= scale;
  return m;
}

MultiplierFunction MultiplierFunction::dilated(double t) const {
  require(std::isfinite(t) && t >= 0.0, ErrorCode::InvalidArgument, "dilation must be >= 0");
  MultiplierFunction m = *this;
  m.dilation_ *= t;
  return m;
}

bool MultiplierFunction::defined_at(double z) const {
  if (kind_ == Kind::Power && param_ < 0.0) return dilation_ * z > 0.0;
  if (kind_ == Kind::Custom) return std::isfinite((*fn_)(dilation_ * z));
  return true;
}

double MultiplierFunction::eval_unit(double z) const {
  const double zp = std::max(z, 0.0);
  switch (kind_) {
    case Kind::Constant: return 1.0;
    case Kind::Exp: return std::exp(-z);
    case Kind::ZExp: return z * std::exp(-z);
    case Kind::Poisson: return std::exp(-std::sqrt(zp));
    case Kind::ResolventPower: return std::pow(1.0 + zp, -param_);
    case Kind::Bump: {
      if (z <= 0.5 || z >= 2.0) return 0.0;
      const double s = std::log2(z);
      return std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
    case Kind::Triangle: {
      if (z <= 0.5 || z >= 2.0) return 0.0;
      return z <= 1.25 ? (z - 0.5) / 0.75 : (2.0 - z) / 0.75;
    }
    case Kind::Tabulated: {
      if (z < a_ || z > b_) return 0.0;
      const double pos = (z - a_) / (b_ - a_) * static_cast<double>(samples_.size() - 1);
      const auto i = std::min(static_cast<std::size_t>(pos), samples_.size() - 2);
      const double frac = pos - static_cast<double>(i);
      return samples_[i] * (1.0 - frac) + samples_[i + 1] * frac;
    }
    case Kind::Power: return zp == 0.0 && param_ == 0.0 ? 1.0 : std::pow(zp, param_);
    case Kind::Custom: return (*fn_)(z);
  }
  return 0.0;
}

double MultiplierFunction::operator()(double z) const {
  if (!defined_at(z))
    fail(ErrorCode::KernelCollision, "multiplier " + label_ + " is undefined at z = " + fmt(z));
  return amplitude_ * eval_unit(dilation_ * z);
}

std::optional<std::pair<double, double>> MultiplierFunction::support() const {
  std::optional<std::pair<double, double>> unit;
  switch (kind_) {
    case Kind::Bump:
    case Kind::Triangle: unit = std::pair{0.5, 2.0}; break;
    case Kind::Tabulated: unit = std::pair{a_, b_}; break;
    case Kind::Custom: unit = custom_support_; break;
    default: break;
  }
  if (!unit) return std::nullopt;
  if (dilation_ == 0.0) return std::pair{0.0, 0.0};
  return std::pair{unit->first / dilation_, unit->second / dilation_};
}

Decay MultiplierFunction::decay() const {
  Decay d;
  switch (kind_) {
    case Kind::Exp:
    case Kind::ZExp: d = {Decay::Kind::Exponential, 2.0}; break;
    case Kind::Poisson: d = {Decay::Kind::StretchedExponential, 2.0}; break;
    case Kind::ResolventPower: d = {Decay::Kind::Power, 2.0 * param_}; break;
    case Kind::Bump:
    case Kind::Triangle:
    case Kind::Tabulated: d = {Decay::Kind::Compact, 0.0}; break;
    case Kind::Power: d = {param_ < 0 ? Decay::Kind::Power : Decay::Kind::None, -2.0 * param_}; break;
    case Kind::Constant: d = {Decay::Kind::None, 0.0}; break;
    case Kind::Custom: d = custom_decay_; break;
  }
  if (d.kind == Decay::Kind::Exponential) d.rate *= dilation_;
  return d;
}

MultiplierFunction tabulate(const MultiplierFunction& m, double a, double b, std::size_t n) {
  require(n >= 2 && b > a, ErrorCode::InvalidArgument, "tabulation needs n >= 2 and b > a");
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = m(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  auto out = MultiplierFunction::tabulated(a, b, std::move(s));
  return out;
}

double l2_norm_squared(const MultiplierFunction& m, double lo, double hi) {
  if (m.amplitude() == 0.0) return 0.0;
  auto sq = [&](double s) {
    const double v = m(s);
    return v * v;
  };
  if (auto sup = m.support()) {
    lo = std::max(lo, sup->first);
    hi = std::min(hi, sup->second);
    return integrate(sq, lo, hi, 1e-13);
  }
  if (std::isfinite(hi)) return integrate(sq, lo, hi, 1e-13);
  const Decay d = m.decay();
  require(d.kind != Decay::Kind::None, ErrorCode::Divergence,
          "multiplier " + m.label() + " is not square integrable at infinity");
  // Integrate on dyadic blocks until the remaining tail is negligible.
  double total = 0.0;
  double a = lo;
  double width = 1.0 / std::max(m.dilation(), 1e-300);
  for (int block = 0; block < 200; ++block) {
    const double b = a + width;
    const double piece = integrate(sq, a, b, 1e-14);
    total += piece;
    a = b;
    width *= 2.0;
    if (d.kind == Decay::Kind::Power) {
      if (d.rate <= 1.0) fail(ErrorCode::Divergence, "power decay too slow for L^2");
      const double tail = a * sq(a) / (d.rate - 1.0);
      if (tail <= 1e-15 * total) return total + tail;
    } else if (piece <= 1e-17 * total && sq(a) * width <= 1e-17 * total) {
      return total;
    }
  }
  fail(ErrorCode::NumericFailure, "L^2 norm of " + m.label() + " did not converge");
}

}  // namespace lps
