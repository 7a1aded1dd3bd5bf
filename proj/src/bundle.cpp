#include "lps/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "lps/error.hpp"

namespace lps {

std::string to_string(Gamma g) {
  switch (g) {
    case Gamma::Gradient: return "gradient";
    case Gamma::Potential: return "potential";
    case Gamma::Both: return "both";
  }
  return "both";
}

Gamma gamma_from_string(const std::string& s) {
  if (s == "gradient" || s == "grad") return Gamma::Gradient;
  if (s == "potential" || s == "sqrtV") return Gamma::Potential;
  if (s == "both") return Gamma::Both;
  fail(ErrorCode::Validation, "unknown gamma channel '" + s + "'");
}

namespace {

std::vector<double> edge_midpoint(const WeightedGraph& g, const Edge& e) {
  const auto& a = g.positions()[e.u];
  const auto& b = g.positions()[e.v];
  std::vector<double> m(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = 0.5 * (a[k] + b[k]);
  return m;
}

std::size_t edge_axis(const WeightedGraph& g, const Edge& e) {
  const auto& a = g.positions()[e.u];
  const auto& b = g.positions()[e.v];
  std::size_t axis = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > best) {
      best = std::abs(a[k] - b[k]);
      axis = k;
    }
  }
  return axis;
}

void require_grid(const WeightedGraph& g) {
  require(g.grid().has_value() && g.has_positions(), ErrorCode::Unsupported,
          "divergence-form coefficients need a grid-built graph (origin '" + g.origin() + "')");
}

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  void real(double x) { bytes(std::bit_cast<std::uint64_t>(x)); }
};

}  // namespace

CoefficientField CoefficientField::from_matrix_field(
    const WeightedGraph& grid, const std::function<Eigen::MatrixXd(const std::vector<double>&)>& A) {
  require_grid(grid);
  CoefficientField field;
  field.ellipticity = std::numeric_limits<double>::infinity();
  for (const auto& e : grid.edges()) {
    Eigen::MatrixXd a = A(edge_midpoint(grid, e));
    const auto k = static_cast<Eigen::Index>(edge_axis(grid, e));
    require(a.rows() == a.cols() && k < a.rows(), ErrorCode::InvalidArgument,
            "coefficient matrix has the wrong shape");
    require((a - a.transpose()).norm() <= 1e-12 * (1.0 + a.norm()), ErrorCode::InvalidArgument,
            "coefficient matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    field.ellipticity = std::min(field.ellipticity, es.eigenvalues().minCoeff());
    field.edge_coefficient.push_back(a(k, k));
  }
  require(field.ellipticity > 0.0, ErrorCode::InvalidArgument,
          "coefficient field is not elliptic (nu <= 0)");
  return field;
}

CoefficientField CoefficientField::scalar(const WeightedGraph& grid, double c) {
  require_grid(grid);
  require(c > 0.0, ErrorCode::InvalidArgument, "scalar coefficient must be positive");
  return {std::vector<double>(grid.edges().size(), c), c};
}

CoefficientField CoefficientField::checkerboard(const WeightedGraph& grid, double low, double high) {
  require_grid(grid);
  require(low > 0.0 && high > 0.0, ErrorCode::InvalidArgument, "checkerboard values must be positive");
  const double h = grid.grid()->spacing;
  CoefficientField field;
  field.ellipticity = std::min(low, high);
  for (const auto& e : grid.edges()) {
    long parity = 0;
    for (double x : grid.positions()[e.u]) parity += std::lround(x / h);
    field.edge_coefficient.push_back(parity % 2 == 0 ? low : high);
  }
  return field;
}

bool OperatorBundle::potential_vanishes() const {
  return potential_.size() == 0 || potential_.cwiseAbs().maxCoeff() == 0.0;
}

void OperatorBundle::assemble(const std::vector<double>& edge_scale) {
  const auto& g = graph_;
  std::vector<std::ptrdiff_t> local(g.n_vertices(), -1);
  active_.clear();
  for (std::size_t v = 0; v < g.n_vertices(); ++v) {
    if (!g.is_boundary(v)) {
      local[v] = static_cast<std::ptrdiff_t>(active_.size());
      active_.push_back(v);
    }
  }
  const auto n = static_cast<Eigen::Index>(active_.size());
  measure_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) measure_[i] = g.measure()[active_[static_cast<std::size_t>(i)]];
  killing_ = Field::Zero(n);
  edges_.clear();

  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < g.edges().size(); ++k) {
    const auto& e = g.edges()[k];
    const double w = e.conductance * edge_scale[k];
    const auto a = local[e.u];
    const auto b = local[e.v];
    if (a >= 0 && b >= 0) {
      edges_.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), w});
      trip.emplace_back(a, a, w);
      trip.emplace_back(b, b, w);
      trip.emplace_back(a, b, -w);
      trip.emplace_back(b, a, -w);
    } else if (a >= 0) {
      killing_[a] += w;
    } else if (b >= 0) {
      killing_[b] += w;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = killing_[i] + measure_[i] * potential_[i];
    if (d != 0.0) trip.emplace_back(i, i, d);
  }
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(trip.begin(), trip.end());
  stiffness_.makeCompressed();
}

Field OperatorBundle::apply(const Field& f) const {
  require(f.size() == static_cast<Eigen::Index>(dim()), ErrorCode::InvalidArgument,
          "function size does not match bundle dimension");
  return (stiffness_ * f).cwiseQuotient(measure_);
}

double OperatorBundle::quadratic_form(const Field& f) const {
  require(f.size() == static_cast<Eigen::Index>(dim()), ErrorCode::InvalidArgument,
          "function size does not match bundle dimension");
  return f.dot(stiffness_ * f);
}

double OperatorBundle::inner(const Field& f, const Field& g) const {
  return (f.array() * g.array() * measure_.array()).sum();
}

Eigen::MatrixXd OperatorBundle::symmetric_matrix() const {
  const Field s = measure_.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd S = Eigen::MatrixXd(stiffness_);
  S = s.asDiagonal() * S * s.asDiagonal();
  return 0.5 * (S + S.transpose());
}

double OperatorBundle::trace() const {
  double t = 0.0;
  for (Eigen::Index i = 0; i < stiffness_.rows(); ++i) t += stiffness_.coeff(i, i) / measure_[i];
  return t;
}

std::vector<double> OperatorBundle::position(std::size_t i) const {
  if (!graph_.has_positions()) return {};
  return graph_.positions()[active_[i]];
}

double OperatorBundle::radius(std::size_t i) const { return graph_.radius(active_[i]); }

std::vector<std::vector<double>> OperatorBundle::active_positions() const {
  std::vector<std::vector<double>> out;
  if (!graph_.has_positions()) return out;
  for (auto v : active_) out.push_back(graph_.positions()[v]);
  return out;
}

std::uint64_t OperatorBundle::content_hash() const {
  Fnv h;
  h.bytes(graph_.n_vertices());
  for (double m : graph_.measure()) h.real(m);
  for (bool b : graph_.boundary()) h.bytes(b ? 1 : 0);
  h.bytes(edges_.size());
  for (const auto& e : edges_) {
    h.bytes(e.u);
    h.bytes(e.v);
    h.real(e.conductance);
  }
  for (Eigen::Index i = 0; i < killing_.size(); ++i) h.real(killing_[i]);
  for (Eigen::Index i = 0; i < potential_.size(); ++i) h.real(potential_[i]);
  return h.h;
}

OperatorBundle attach_potential(const WeightedGraph& graph, const Field& V) {
  require(V.size() == static_cast<Eigen::Index>(graph.n_vertices()), ErrorCode::InvalidArgument,
          "potential must have one value per graph vertex");
  OperatorBundle b;
  b.graph_ = graph;
  std::vector<double> ones(graph.edges().size(), 1.0);
  b.potential_ = Field::Zero(static_cast<Eigen::Index>(graph.n_vertices() - graph.n_boundary()));
  Eigen::Index k = 0;
  for (std::size_t v = 0; v < graph.n_vertices(); ++v) {
    if (graph.is_boundary(v)) continue;
    const double x = V[static_cast<Eigen::Index>(v)];
    require(std::isfinite(x) && x >= 0.0, ErrorCode::InvalidArgument,
            "potential must be finite and non-negative (vertex " + std::to_string(v) + ")");
    b.potential_[k++] = x;
  }
  b.form_ = OperatorForm::Schroedinger;
  b.assemble(ones);
  return b;
}

OperatorBundle attach_potential(const WeightedGraph& graph,
                                const std::function<double(const std::vector<double>&)>& V) {
  require(graph.has_positions(), ErrorCode::InvalidArgument,
          "a potential given as a function of position needs vertex positions");
  Field values(static_cast<Eigen::Index>(graph.n_vertices()));
  for (std::size_t v = 0; v < graph.n_vertices(); ++v)
    values[static_cast<Eigen::Index>(v)] = graph.is_boundary(v) ? 0.0 : V(graph.positions()[v]);
  return attach_potential(graph, values);
}

OperatorBundle attach_divergence_form(const WeightedGraph& grid, const CoefficientField& A) {
  require_grid(grid);
  require(A.edge_coefficient.size() == grid.edges().size(), ErrorCode::InvalidArgument,
          "coefficient field does not match the grid's edges");
  require(A.ellipticity > 0.0, ErrorCode::InvalidArgument, "coefficient field is not elliptic");
  for (double a : A.edge_coefficient)
    require(a >= A.ellipticity * (1.0 - 1e-12), ErrorCode::InvalidArgument,
            "edge coefficient below the ellipticity constant");
  OperatorBundle b;
  b.graph_ = grid;
  b.potential_ = Field::Zero(static_cast<Eigen::Index>(grid.n_vertices() - grid.n_boundary()));
  b.form_ = OperatorForm::Divergence;
  b.coefficients_ = A;
  b.gamma_ = Gamma::Gradient;
  b.assemble(A.edge_coefficient);
  return b;
}

Field gradient_squared(const OperatorBundle& b, const Field& f) {
  const auto& mu = b.measure();
  Field acc = Field::Zero(f.size());
  for (const auto& e : b.edges()) {
    const double d = f[static_cast<Eigen::Index>(e.u)] - f[static_cast<Eigen::Index>(e.v)];
    const double c = e.conductance * d * d;
    acc[static_cast<Eigen::Index>(e.u)] += c;
    acc[static_cast<Eigen::Index>(e.v)] += c;
  }
  acc *= 0.5;
  acc.array() += b.killing().array() * f.array().square();
  return acc.cwiseQuotient(mu);
}

Field gradient_field(const OperatorBundle& b, const Field& f) {
  return gradient_squared(b, f).cwiseSqrt();
}

Field gradient_dot(const OperatorBundle& b, const Field& f, const Field& g) {
  Field acc = Field::Zero(f.size());
  for (const auto& e : b.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    const double c = e.conductance * (f[u] - f[v]) * (g[u] - g[v]);
    acc[u] += c;
    acc[v] += c;
  }
  acc *= 0.5;
  acc.array() += b.killing().array() * f.array() * g.array();
  return acc.cwiseQuotient(b.measure());
}

Field potential_squared(const OperatorBundle& b, const Field& f) {
  return b.potential().array() * f.array().square();
}

Field gamma_squared(const OperatorBundle& b, const Field& f, Gamma g) {
  switch (g) {
    case Gamma::Gradient: return gradient_squared(b, f);
    case Gamma::Potential: return potential_squared(b, f);
    case Gamma::Both: return gradient_squared(b, f) + potential_squared(b, f);
  }
  return gradient_squared(b, f);
}

ReverseHolderEstimate check_reverse_holder(const WeightedGraph& graph, const Field& V, double q,
                                           const std::vector<double>& ball_radii,
                                           std::size_t max_centers) {
  require(graph.has_positions(), ErrorCode::InvalidArgument, "reverse Holder check needs positions");
  require(q > 1.0, ErrorCode::InvalidArgument, "reverse Holder exponent must exceed 1");
  require(V.size() == static_cast<Eigen::Index>(graph.n_vertices()), ErrorCode::InvalidArgument,
          "potential size mismatch");
  require(!ball_radii.empty() && max_centers >= 1, ErrorCode::InvalidArgument,
          "need at least one radius and one center");
  const std::size_t n = graph.n_vertices();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_centers - 1) / max_centers);

  ReverseHolderEstimate est;
  est.constant = 1.0;
  bool first = true;
  const auto& pos = graph.positions();
  for (std::size_t c = 0; c < n; c += stride) {
    for (double rho : ball_radii) {
      double mass = 0.0, s1 = 0.0, sq = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < pos[v].size(); ++k) d2 += (pos[v][k] - pos[c][k]) * (pos[v][k] - pos[c][k]);
        if (d2 > rho * rho * (1.0 + 1e-12)) continue;
        const double mu = graph.measure()[v];
        const double x = V[static_cast<Eigen::Index>(v)];
        mass += mu;
        s1 += mu * x;
        sq += mu * std::pow(x, q);
      }
      if (mass == 0.0) continue;
      ++est.balls_sampled;
      const double a1 = s1 / mass;
      const double aq = sq / mass;
      double ratio;
      if (a1 == 0.0 && aq == 0.0) {
        ratio = 1.0;
      } else if (a1 == 0.0) {
        ratio = std::numeric_limits<double>::infinity();
      } else {
        ratio = std::pow(aq, 1.0 / q) / a1;
      }
      if (first || ratio > est.constant) {
        est.constant = ratio;
        est.worst_center = pos[c];
        est.worst_radius = rho;
        first = false;
      }
    }
  }
  est.infinite = std::isinf(est.constant);
  return est;
}

}  // namespace lps
