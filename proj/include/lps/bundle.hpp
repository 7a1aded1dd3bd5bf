#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lps/graph.hpp"

namespace lps {

/// Which realization of the "gradient" a quantity uses: the edge gradient,
/// multiplication by sqrt(V), or both channels together.
enum class Gamma { Gradient, Potential, Both };

std::string to_string(Gamma g);
Gamma gamma_from_string(const std::string& s);

enum class OperatorForm { Schroedinger, Divergence };

/// Per-edge coefficients a_uv of -div(A grad) on a grid, aligned with
/// graph.edges(). `ellipticity` is a lower bound for every coefficient.
struct CoefficientField {
  std::vector<double> edge_coefficient;
  double ellipticity = 0.0;

  /// A(x) sampled at edge midpoints; an edge along axis k picks A_kk. The
  /// ellipticity constant is the smallest eigenvalue of A over the samples.
  static CoefficientField from_matrix_field(
      const WeightedGraph& grid,
      const std::function<Eigen::MatrixXd(const std::vector<double>&)>& A);

  static CoefficientField scalar(const WeightedGraph& grid, double c);

  /// Piecewise constant a in {low, high} by parity of the lower endpoint's
  /// lattice cell.
  static CoefficientField checkerboard(const WeightedGraph& grid, double low, double high);
};

/// L = Delta_G + V (or -div(A grad)) on the interior vertices of a graph.
///
/// Functions handed to a bundle live on its active vertices (all vertices
/// that are not flagged Dirichlet); `active_vertices()` maps them back to the
/// graph. The matrix of L is M^{-1} K with K the symmetric stiffness matrix
/// and M the diagonal measure, so L is self-adjoint for <f,g> = sum mu f g.
class OperatorBundle {
public:
  OperatorBundle() = default;

  const WeightedGraph& graph() const { return graph_; }
  std::size_t dim() const { return active_.size(); }
  const std::vector<std::size_t>& active_vertices() const { return active_; }
  const Field& measure() const { return measure_; }
  const Field& potential() const { return potential_; }
  /// Sum of conductances from each active vertex to Dirichlet neighbours.
  const Field& killing() const { return killing_; }
  /// Interior edges, endpoints in active-vertex numbering.
  const std::vector<Edge>& edges() const { return edges_; }
  OperatorForm form() const { return form_; }
  const std::optional<CoefficientField>& coefficients() const { return coefficients_; }
  Gamma gamma() const { return gamma_; }
  void set_gamma(Gamma g) { gamma_ = g; }

  bool has_dirichlet() const { return graph_.n_boundary() > 0; }
  bool potential_vanishes() const;

  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

  /// Lf.
  Field apply(const Field& f) const;
  /// <Lf, f> computed from the stiffness matrix.
  double quadratic_form(const Field& f) const;
  /// sum_x mu(x) f(x) g(x).
  double inner(const Field& f, const Field& g) const;

  /// Dense symmetric M^{-1/2} K M^{-1/2}, unitarily similar to L.
  Eigen::MatrixXd symmetric_matrix() const;

  /// Trace of L, i.e. sum of the diagonal of M^{-1} K.
  double trace() const;

  /// Position of active vertex i (empty when the graph has none).
  std::vector<double> position(std::size_t i) const;
  double radius(std::size_t i) const;

  /// Positions of the active vertices pulled back from the graph.
  std::vector<std::vector<double>> active_positions() const;

  /// Content hash over graph, potential and coefficients (FNV-1a of the
  /// exact bit patterns); keys the decomposition cache.
  std::uint64_t content_hash() const;

  friend OperatorBundle attach_potential(const WeightedGraph&, const Field&);
  friend OperatorBundle attach_divergence_form(const WeightedGraph&, const CoefficientField&);

private:
  void assemble(const std::vector<double>& edge_scale);

  WeightedGraph graph_;
  std::vector<std::size_t> active_;
  Field measure_;
  Field potential_;
  Field killing_;
  std::vector<Edge> edges_;
  OperatorForm form_ = OperatorForm::Schroedinger;
  std::optional<CoefficientField> coefficients_;
  Gamma gamma_ = Gamma::Both;
  Eigen::SparseMatrix<double> stiffness_;
};

/// V is given per graph vertex (boundary entries are ignored) and must be
/// non-negative; throws Error(InvalidArgument) otherwise.
OperatorBundle attach_potential(const WeightedGraph& graph, const Field& V);
OperatorBundle attach_potential(const WeightedGraph& graph,
                                const std::function<double(const std::vector<double>&)>& V);

/// Requires a graph produced by build_grid/build_path_graph
/// (Error(Unsupported) otherwise) and an elliptic field.
OperatorBundle attach_divergence_form(const WeightedGraph& grid, const CoefficientField& A);

/// Carre du champ squared: (1/(2 mu(x))) sum_y w_xy (f(y) - f(x))^2, with a
/// Dirichlet neighbour contributing w f(x)^2 / mu(x) (the boundary vertex is
/// outside the domain, so its half of the edge is attributed to x). Summed
/// against mu this equals the edge part of <Lf, f> exactly.
Field gradient_squared(const OperatorBundle& b, const Field& f);
Field gradient_field(const OperatorBundle& b, const Field& f);

/// Polarized carre du champ (grad f . grad g)(x), same conventions.
Field gradient_dot(const OperatorBundle& b, const Field& f, const Field& g);

/// V f^2 pointwise.
Field potential_squared(const OperatorBundle& b, const Field& f);

/// |Gamma f|^2 pointwise; for Gamma::Both the two squares are added.
Field gamma_squared(const OperatorBundle& b, const Field& f, Gamma g);

struct ReverseHolderEstimate {
  double constant = 1.0;  ///< +inf when a ball has zero mean but positive q-mean
  bool infinite = false;
  std::vector<double> worst_center;
  double worst_radius = 0.0;
  std::size_t balls_sampled = 0;
};

/// max over sampled balls of (avg_B V^q)^(1/q) / avg_B V, averages weighted by
/// the vertex measure. Centers: every vertex position when the graph has at
/// most `max_centers` vertices, otherwise an evenly strided subset that
/// always contains vertex 0. A ball with avg V = avg V^q = 0 counts as 1.
ReverseHolderEstimate check_reverse_holder(const WeightedGraph& graph, const Field& V, double q,
                                           const std::vector<double>& ball_radii,
                                           std::size_t max_centers = 64);

}  // namespace lps
