#include "lps/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include "lps/error.hpp"

namespace lps {

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

// Row-major multi-index decode.
std::vector<std::size_t> unflatten(std::size_t idx, const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> c(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    c[k] = idx % dims[k];
    idx /= dims[k];
  }
  return c;
}

std::size_t flatten(const std::vector<std::size_t>& c, const std::vector<std::size_t>& dims) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + c[k];
  return idx;
}

}  // namespace

WeightedGraph::WeightedGraph(std::vector<double> measure, std::vector<Edge> edges,
                             std::vector<std::vector<double>> positions, std::vector<bool> boundary,
                             std::string origin, std::optional<GridShape> grid)
    : measure_(std::move(measure)),
      edges_(std::move(edges)),
      positions_(std::move(positions)),
      boundary_(std::move(boundary)),
      origin_(std::move(origin)),
      grid_(std::move(grid)) {
  const std::size_t n = measure_.size();
  require(n >= 1, ErrorCode::InvalidArgument, "graph needs at least one vertex");
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(measure_[i]) && measure_[i] > 0.0, ErrorCode::InvalidArgument,
            "vertex " + std::to_string(i) + " has non-positive measure");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : edges_) {
    require(e.u < n && e.v < n, ErrorCode::InvalidArgument, "edge endpoint out of range");
    require(e.u != e.v, ErrorCode::InvalidArgument,
            "self-loop at vertex " + std::to_string(e.u));
    require(std::isfinite(e.conductance) && e.conductance > 0.0, ErrorCode::InvalidArgument,
            "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                ") has non-positive conductance");
    auto key = std::minmax(e.u, e.v);
    require(seen.insert({key.first, key.second}).second, ErrorCode::InvalidArgument,
            "duplicate edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }
  require(positions_.empty() || positions_.size() == n, ErrorCode::InvalidArgument,
          "positions must be empty or one per vertex");
  require(boundary_.empty() || boundary_.size() == n, ErrorCode::InvalidArgument,
          "boundary flags must be empty or one per vertex");
  if (!boundary_.empty()) {
    require(std::count(boundary_.begin(), boundary_.end(), false) > 0,
            ErrorCode::InvalidArgument, "every vertex is flagged Dirichlet");
  }
}

std::size_t WeightedGraph::n_boundary() const {
  return static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), true));
}

double WeightedGraph::total_measure() const {
  return std::accumulate(measure_.begin(), measure_.end(), 0.0);
}

std::vector<std::size_t> WeightedGraph::component_labels() const {
  UnionFind uf(n_vertices());
  for (const auto& e : edges_) uf.unite(e.u, e.v);
  std::map<std::size_t, std::size_t> relabel;
  std::vector<std::size_t> labels(n_vertices());
  for (std::size_t i = 0; i < n_vertices(); ++i) {
    auto root = uf.find(i);
    auto it = relabel.try_emplace(root, relabel.size()).first;
    labels[i] = it->second;
  }
  return labels;
}

std::size_t WeightedGraph::n_components() const {
  auto labels = component_labels();
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

double WeightedGraph::radius(std::size_t v) const {
  if (positions_.empty()) return 0.0;
  double s = 0.0;
  for (double x : positions_[v]) s += x * x;
  return std::sqrt(s);
}

WeightedGraph build_path_graph(std::size_t n, double h) {
  require(n >= 2, ErrorCode::InvalidArgument, "path graph needs n >= 2");
  require(h > 0.0 && std::isfinite(h), ErrorCode::InvalidArgument, "spacing h must be positive");
  std::vector<double> measure(n, h);
  std::vector<Edge> edges;
  std::vector<std::vector<double>> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = {static_cast<double>(i) * h};
    if (i + 1 < n) edges.push_back({i, i + 1, 1.0 / h});
  }
  return WeightedGraph(std::move(measure), std::move(edges), std::move(pos), {}, "path",
                       GridShape{{n}, h});
}

WeightedGraph build_grid(const std::vector<std::size_t>& dims, double h, bool dirichlet) {
  require(!dims.empty(), ErrorCode::InvalidArgument, "grid dims must be non-empty");
  require(h > 0.0 && std::isfinite(h), ErrorCode::InvalidArgument, "spacing h must be positive");
  for (auto d : dims) require(d >= 2, ErrorCode::InvalidArgument, "every grid dim must be >= 2");
  if (dirichlet) {
    for (auto d : dims)
      require(d >= 3, ErrorCode::InvalidArgument, "Dirichlet grid needs every dim >= 3");
  }
  const std::size_t n = product(dims);
  const double N = static_cast<double>(dims.size());
  const double mu = std::pow(h, N);
  const double w = std::pow(h, N - 2.0);

  std::vector<double> measure(n, mu);
  std::vector<std::vector<double>> pos(n);
  std::vector<bool> boundary(dirichlet ? n : 0, false);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = unflatten(i, dims);
    pos[i].resize(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
      pos[i][k] = static_cast<double>(c[k]) * h;
      if (dirichlet && (c[k] == 0 || c[k] + 1 == dims[k])) boundary[i] = true;
      if (c[k] + 1 < dims[k]) {
        auto nb = c;
        ++nb[k];
        edges.push_back({i, flatten(nb, dims), w});
      }
    }
  }
  return WeightedGraph(std::move(measure), std::move(edges), std::move(pos), std::move(boundary),
                       "grid", GridShape{dims, h});
}

WeightedGraph build_radial_graph(int n_dim, double r_max, std::size_t m) {
  require(n_dim >= 2, ErrorCode::InvalidArgument, "radial graph needs n_dim >= 2");
  require(m >= 3, ErrorCode::InvalidArgument, "radial graph needs m >= 3");
  require(r_max > 0.0 && std::isfinite(r_max), ErrorCode::InvalidArgument, "r_max must be positive");
  const double dr = r_max / static_cast<double>(m);
  const double e = static_cast<double>(n_dim - 1);
  std::vector<double> measure(m);
  std::vector<std::vector<double>> pos(m);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = static_cast<double>(i + 1) * dr;
    measure[i] = std::pow(r, e) * dr;
    pos[i] = {r};
    if (i + 1 < m) {
      const double mid = r + 0.5 * dr;
      edges.push_back({i, i + 1, std::pow(mid, e) / dr});
    }
  }
  return WeightedGraph(std::move(measure), std::move(edges), std::move(pos), {}, "radial");
}

WeightedGraph build_connected_sum(int n_dim, std::size_t side, std::size_t neck_width) {
  require(n_dim >= 2, ErrorCode::InvalidArgument, "connected sum needs n_dim >= 2");
  require(neck_width >= 1, ErrorCode::InvalidArgument, "neck_width must be >= 1");
  require(side >= 4 * neck_width, ErrorCode::InvalidArgument,
          "neck too large: need side >= 4 * neck_width");
  const std::vector<std::size_t> dims(static_cast<std::size_t>(n_dim), side);
  const std::size_t cells = product(dims);
  const std::size_t start = (side - neck_width) / 2;

  auto in_hole = [&](const std::vector<std::size_t>& c) {
    return std::all_of(c.begin(), c.end(),
                       [&](std::size_t x) { return x >= start && x < start + neck_width; });
  };
  auto in_strip = [&](const std::vector<std::size_t>& c) {
    if (c[0] + 1 != start) return false;
    return std::all_of(c.begin() + 1, c.end(),
                       [&](std::size_t x) { return x >= start && x < start + neck_width; });
  };

  // Map (sheet, cell) -> vertex id; strip cells of sheet 1 reuse sheet-0 ids.
  std::vector<std::vector<std::ptrdiff_t>> id(2, std::vector<std::ptrdiff_t>(cells, -1));
  std::vector<std::vector<double>> pos;
  std::size_t next = 0;
  for (int sheet = 0; sheet < 2; ++sheet) {
    for (std::size_t i = 0; i < cells; ++i) {
      auto c = unflatten(i, dims);
      if (in_hole(c)) continue;
      if (sheet == 1 && in_strip(c)) {
        id[1][i] = id[0][i];
        continue;
      }
      id[sheet][i] = static_cast<std::ptrdiff_t>(next++);
      std::vector<double> p(c.begin(), c.end());
      for (auto& x : p) x -= 0.5 * static_cast<double>(side - 1);
      p.push_back(in_strip(c) ? 0.0 : (sheet == 0 ? -1.0 : 1.0));
      pos.push_back(std::move(p));
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Edge> edges;
  for (int sheet = 0; sheet < 2; ++sheet) {
    for (std::size_t i = 0; i < cells; ++i) {
      if (id[sheet][i] < 0) continue;
      auto c = unflatten(i, dims);
      for (std::size_t k = 0; k < dims.size(); ++k) {
        if (c[k] + 1 >= side) continue;
        auto nb = c;
        ++nb[k];
        const auto j = flatten(nb, dims);
        if (id[sheet][j] < 0) continue;
        auto a = static_cast<std::size_t>(id[sheet][i]);
        auto b = static_cast<std::size_t>(id[sheet][j]);
        auto key = std::minmax(a, b);
        if (seen.insert({key.first, key.second}).second) edges.push_back({key.first, key.second, 1.0});
      }
    }
  }
  std::vector<double> measure(next, 1.0);
  return WeightedGraph(std::move(measure), std::move(edges), std::move(pos), {}, "connected_sum");
}

}  // namespace lps
