#pragma once

#include <cstdint>
#include <string>

#include "lps/bundle.hpp"
#include "lps/spectral.hpp"

namespace lps {

struct Probe {
  Field f;
  std::string label;
};

/// Deterministic probe battery shared by every norm estimator. Probe i depends
/// only on (seed, i): index 0 is the constant function; the rest cycle through
/// Gaussian noise, vertex indicators, low eigenvectors (above the kernel),
/// random mixtures of low eigenvectors and smooth Gaussian bumps around random
/// centres (mixtures again when positions are absent).
class ProbeBattery {
public:
  ProbeBattery(const OperatorBundle& bundle, const SpectralDecomposition& dec, std::uint64_t seed)
      : bundle_(bundle), dec_(dec), seed_(seed) {}

  Probe operator()(std::size_t i) const;

  /// Small perturbation of `base` used by greedy ascent: flips signs on a
  /// random vertex subset or adds a scaled random low mode.
  Probe perturb(const Field& base, std::size_t step) const;

private:
  const OperatorBundle& bundle_;
  const SpectralDecomposition& dec_;
  std::uint64_t seed_;
};

}  // namespace lps
