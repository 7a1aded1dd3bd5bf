#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <fftw3.h>

#include "lps/error.hpp"
#include "lps/multiplier.hpp"

namespace lps {

double sobolev_norm(const MultiplierFunction& m, double delta, std::size_t resolution,
                    std::size_t padding) {
  require(delta >= 0.0 && std::isfinite(delta), ErrorCode::InvalidArgument,
          "Sobolev order must be >= 0");
  require(padding >= 1, ErrorCode::InvalidArgument, "padding factor must be >= 1");

  MultiplierFunction tab = m;
  if (m.kind() != MultiplierFunction::Kind::Tabulated) {
    auto sup = m.support();
    require(sup.has_value() && resolution >= 2, ErrorCode::InvalidArgument,
            "Sobolev norm needs a compactly supported tabulation of " + m.label());
    tab = tabulate(m, sup->first, sup->second, resolution);
  } else if (resolution >= 2) {
    auto [a, b] = m.tabulation_interval();
    tab = tabulate(m, a, b, resolution);
  }

  const auto& s0 = tab.samples();
  const double amp = tab.amplitude();
  const auto [a, b] = tab.tabulation_interval();
  const std::size_t n = s0.size();
  double peak = 0.0;
  for (double x : s0) peak = std::max(peak, std::abs(amp * x));
  if (peak == 0.0) return 0.0;
  require(std::abs(amp * s0.front()) <= 1e-10 * peak && std::abs(amp * s0.back()) <= 1e-10 * peak,
          ErrorCode::InvalidArgument,
          "tabulation of " + m.label() + " does not vanish at its endpoints (not compact)");

  const double h = (b - a) / static_cast<double>(n - 1);
  const std::size_t P = padding * n;
  std::vector<double> in(P, 0.0);
  for (std::size_t j = 0; j < n; ++j) in[j] = amp * s0[j];
  std::vector<std::complex<double>> out(P / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(P), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const double two_pi = 2.0 * std::acos(-1.0);
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double xi = two_pi * static_cast<double>(k) / (static_cast<double>(P) * h);
    const double w = std::pow(1.0 + xi * xi, delta);
    const bool paired = k != 0 && !(P % 2 == 0 && k == P / 2);
    total += (paired ? 2.0 : 1.0) * w * std::norm(out[k]);
  }
  return std::sqrt(total * h / static_cast<double>(P));
}

}  // namespace lps
