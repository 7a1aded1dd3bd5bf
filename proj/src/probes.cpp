#include "lps/probes.hpp"

#include <algorithm>
#include <cmath>

#include "lps/rng.hpp"

namespace lps {

namespace {

constexpr std::size_t kLowModes = 8;

std::size_t low_mode(const SpectralDecomposition& dec, std::size_t j) {
  const std::size_t first = std::min(dec.kernel_dim, dec.size() - 1);
  const std::size_t avail = dec.size() - first;
  return first + j % std::max<std::size_t>(1, std::min(avail, kLowModes));
}

}  // namespace

Probe ProbeBattery::operator()(std::size_t i) const {
  const auto n = static_cast<Eigen::Index>(bundle_.dim());
  if (i == 0) return {Field::Ones(n), "constant"};
  Rng rng(derive_seed(seed_, i));
  const std::size_t type = (i - 1) % 5;
  const std::size_t round = (i - 1) / 5;
  switch (type) {
    case 0: {
      Field f(n);
      for (Eigen::Index x = 0; x < n; ++x) f[x] = rng.normal();
      return {f, "gaussian"};
    }
    case 1: {
      Field f = Field::Zero(n);
      const auto x = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      f[x] = 1.0;
      return {f, "indicator:" + std::to_string(x)};
    }
    case 2: {
      const std::size_t j = low_mode(dec_, round);
      return {dec_.eigenvectors.col(static_cast<Eigen::Index>(j)), "eigenvector:" + std::to_string(j)};
    }
    case 3: {
      Field f = Field::Zero(n);
      for (std::size_t k = 0; k < kLowModes; ++k) {
        const std::size_t j = low_mode(dec_, k);
        f += rng.normal() * dec_.eigenvectors.col(static_cast<Eigen::Index>(j));
      }
      return {f, "low-mix"};
    }
    default: {
      if (!bundle_.graph().has_positions()) {
        Field f = Field::Zero(n);
        for (std::size_t k = 0; k < 2 * kLowModes; ++k) {
          const std::size_t j = std::min(dec_.size() - 1, dec_.kernel_dim + k);
          f += rng.normal() * dec_.eigenvectors.col(static_cast<Eigen::Index>(j));
        }
        return {f, "mode-mix"};
      }
      const auto pos = bundle_.active_positions();
      const auto c = pos[rng.below(static_cast<std::uint64_t>(n))];
      double diam = 0.0;
      for (const auto& p : pos)
        for (std::size_t k = 0; k < p.size(); ++k) diam = std::max(diam, std::abs(p[k] - c[k]));
      const double sigma = std::max(1e-12, diam * std::pow(2.0, -rng.uniform(0.5, 5.0)));
      Field f(n);
      for (Eigen::Index x = 0; x < n; ++x) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) d2 += (pos[static_cast<std::size_t>(x)][k] - c[k]) * (pos[static_cast<std::size_t>(x)][k] - c[k]);
        f[x] = std::exp(-0.5 * d2 / (sigma * sigma));
      }
      return {f, "bump"};
    }
  }
}

Probe ProbeBattery::perturb(const Field& base, std::size_t step) const {
  Rng rng(derive_seed(seed_ ^ 0x5bd1e995ULL, step));
  Field f = base;
  const auto n = f.size();
  if (rng.uniform() < 0.5) {
    const auto flips = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n) / 16);
    for (std::uint64_t k = 0; k < flips; ++k) {
      const auto x = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      f[x] = -f[x];
    }
    return {f, "ascent:flip"};
  }
  const std::size_t j = low_mode(dec_, rng.below(kLowModes));
  const double scale = 0.25 * rng.normal() * std::sqrt((base.array().square() * dec_.measure.array()).sum());
  f += scale * dec_.eigenvectors.col(static_cast<Eigen::Index>(j));
  return {f, "ascent:mode"};
}

}  // namespace lps
