#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lps/bundle.hpp"
#include "lps/graph.hpp"
#include "lps/rng.hpp"

namespace lps::testing {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline Field random_field(std::size_t n, Rng& rng) {
  Field f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = rng.normal();
  return f;
}

inline Field random_potential(const WeightedGraph& g, Rng& rng, double scale) {
  Field V(static_cast<Eigen::Index>(g.n_vertices()));
  for (Eigen::Index i = 0; i < V.size(); ++i) V[i] = rng.uniform() < 0.3 ? 0.0 : scale * rng.uniform();
  return V;
}

/// One draw from the randomized battery used by the property tests: grids
/// (with and without Dirichlet layers), radial chains, connected sums,
/// divergence-form grids and paths, each with a random V >= 0 where it makes
/// sense. `max_vertices` keeps dense oracles affordable.
inline OperatorBundle random_bundle(Rng& rng, std::size_t max_vertices = 200) {
  const auto pick = rng.below(6);
  switch (pick) {
    case 0: {
      const std::size_t a = 3 + rng.below(8), b = 3 + rng.below(8);
      const auto g = build_grid({a, b}, rng.uniform(0.1, 1.5), rng.uniform() < 0.5);
      return attach_potential(g, random_potential(g, rng, 5.0));
    }
    case 1: {
      const int n = 2 + static_cast<int>(rng.below(3));
      const auto g = build_radial_graph(n, rng.uniform(0.5, 3.0), 5 + rng.below(40));
      const double a = rng.uniform(0.0, 1.5);
      return attach_potential(g, [a](const std::vector<double>& x) { return std::pow(x[0], -a); });
    }
    case 2: {
      const std::size_t neck = 1 + rng.below(2);
      const std::size_t side = std::max<std::size_t>(4 * neck, 5 + rng.below(5));
      const auto g = build_connected_sum(2, side, neck);
      return attach_potential(g, Field::Zero(static_cast<Eigen::Index>(g.n_vertices())));
    }
    case 3: {
      const std::size_t s = 4 + rng.below(7);
      const auto g = build_grid({s, s}, rng.uniform(0.2, 1.0), rng.uniform() < 0.5);
      const double lo = rng.uniform(0.2, 2.0), hi = lo * rng.uniform(1.0, 20.0);
      return attach_divergence_form(g, CoefficientField::checkerboard(g, lo, hi));
    }
    case 4: {
      const std::size_t s = 3 + rng.below(6);
      const auto g = build_grid({s, s, 3}, rng.uniform(0.3, 1.0), false);
      return attach_potential(g, random_potential(g, rng, 2.0));
    }
    default: {
      const std::size_t n = 2 + rng.below(std::min<std::size_t>(max_vertices, 60));
      const auto g = build_path_graph(n, rng.uniform(0.05, 2.0));
      return attach_potential(g, random_potential(g, rng, 3.0));
    }
  }
}

/// Runs `prop` on `cases` seeded draws; each case receives its own generator
/// so failures are reproducible from (seed, case index).
inline void for_all_cases(std::uint64_t seed, std::size_t cases,
                          const std::function<void(std::size_t, Rng&)>& prop) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(derive_seed(seed, i));
    prop(i, rng);
  }
}

}  // namespace lps::testing
