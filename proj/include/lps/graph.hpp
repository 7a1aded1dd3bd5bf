#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lps {

/// A real function on vertices (or on the active vertices of a bundle).
using Field = Eigen::VectorXd;

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double conductance = 1.0;
};

/// Shape metadata recorded by build_grid; required by attach_divergence_form.
struct GridShape {
  std::vector<std::size_t> dims;
  double spacing = 1.0;
};

/// Vertex set with positive measure and symmetric positive conductances.
///
/// Vertices flagged as boundary carry Dirichlet conditions: operators built on
/// the graph act on the remaining (interior) vertices and see the boundary as
/// a zero extension.
class WeightedGraph {
public:
  WeightedGraph() = default;

  /// Validates every invariant; throws Error(InvalidArgument) on
  /// non-positive measure/conductance, self-loops, duplicate or out-of-range
  /// edges, or position/boundary arrays of the wrong length.
  WeightedGraph(std::vector<double> measure, std::vector<Edge> edges,
                std::vector<std::vector<double>> positions = {},
                std::vector<bool> boundary = {}, std::string origin = "custom",
                std::optional<GridShape> grid = std::nullopt);

  std::size_t n_vertices() const { return measure_.size(); }
  const std::vector<double>& measure() const { return measure_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::vector<double>>& positions() const { return positions_; }
  bool has_positions() const { return !positions_.empty(); }
  bool is_boundary(std::size_t v) const { return !boundary_.empty() && boundary_[v]; }
  const std::vector<bool>& boundary() const { return boundary_; }
  std::size_t n_boundary() const;
  const std::string& origin() const { return origin_; }
  const std::optional<GridShape>& grid() const { return grid_; }

  double total_measure() const;

  /// Connected components of the whole vertex set.
  std::size_t n_components() const;
  /// Component label per vertex, labels dense in [0, n_components()).
  std::vector<std::size_t> component_labels() const;

  /// Euclidean norm of the position of v (0 when positions are absent).
  double radius(std::size_t v) const;

private:
  std::vector<double> measure_;
  std::vector<Edge> edges_;
  std::vector<std::vector<double>> positions_;
  std::vector<bool> boundary_;
  std::string origin_ = "custom";
  std::optional<GridShape> grid_;
};

/// Path P_n with spacing h: measure h, conductance 1/h.
WeightedGraph build_path_graph(std::size_t n, double h);

/// Tensor grid with spacing h (measure h^N, conductance h^(N-2)). With
/// `dirichlet` the outer layer is flagged as boundary.
WeightedGraph build_grid(const std::vector<std::size_t>& dims, double h, bool dirichlet);

/// Radial chain r_i = i*r_max/m (i = 1..m) carrying the r^(n-1) dr measure.
WeightedGraph build_radial_graph(int n_dim, double r_max, std::size_t m);

/// Two n_dim-dimensional sheets of extent `side` (unit spacing), each with a
/// removed central cube of side `neck_width`; the sheets are glued by
/// identifying the neck_width^(n_dim-1) vertices of the face strip lying just
/// below the hole (first coordinate = hole start - 1). Identified vertices keep
/// a single copy of each edge. Vertex count:
///   2 * (side^n - neck^n) - neck^(n-1).
WeightedGraph build_connected_sum(int n_dim, std::size_t side, std::size_t neck_width);

}  // namespace lps
