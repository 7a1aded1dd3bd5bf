#include "lps/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lps/error.hpp"
#include "lps/graph.hpp"

namespace lps {

std::string version_string() { return std::string("lpslab ") + LPS_VERSION; }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Observe: return "observe";
    case Verdict::Violation: return "violation";
  }
  return "observe";
}

std::string to_string(Statement s) { return s == Statement::Exact ? "exact" : "qualitative"; }

CheckResult CheckResult::exact(std::string id, double tolerance) {
  return CheckResult(std::move(id), Statement::Exact, tolerance);
}

CheckResult CheckResult::qualitative(std::string id, double tolerance) {
  return CheckResult(std::move(id), Statement::Qualitative, tolerance);
}

void CheckResult::expect(bool holds, const std::string& what) {
  if (holds) return;
  failures_.push_back(what);
  if (statement_ == Statement::Exact)
    verdict_ = Verdict::Violation;
  else if (verdict_ == Verdict::Pass)
    verdict_ = Verdict::Observe;
}

void CheckResult::set_inputs(const std::string& canonical_inputs) { digest_ = digest_hex(canonical_inputs); }

double CheckResult::value(const std::string& name) const {
  for (const auto& [k, v] : measured_)
    if (k == name) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json CheckResult::to_json() const {
  nlohmann::json j;
  j["id"] = id_;
  j["statement"] = to_string(statement_);
  j["verdict"] = to_string(verdict_);
  j["tolerance"] = tolerance_;
  j["inputs_digest"] = digest_;
  nlohmann::json m = nlohmann::json::array();
  for (const auto& [k, v] : measured_) {
    if (std::isfinite(v))
      m.push_back({{"name", k}, {"value", v}});
    else
      m.push_back({{"name", k}, {"value", std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")}});
  }
  j["measured"] = m;
  j["failures"] = failures_;
  j["notes"] = notes_;
  return j;
}

std::string digest_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

double relative_spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo - 1.0;
}

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), ErrorCode::InvalidArgument, "kendall_tau needs paired samples");
  long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double s = (a[i] - a[j]) * (b[i] - b[j]);
      if (s > 0) ++concordant;
      else if (s < 0) ++discordant;
    }
  }
  if (concordant + discordant == 0) return 1.0;
  return static_cast<double>(concordant - discordant) / static_cast<double>(concordant + discordant);
}

TimeGrid semigroup_grid(const SpectralDecomposition& dec, std::size_t nodes) {
  return TimeGrid::for_spec(dec, FunctionalSpec::of(FunctionalKind::H), nodes);
}

double semigroup_energy(const OperatorBundle& bundle, const SpectralDecomposition& dec, const Field& f,
                        double p, const TimeGrid& grid) {
  Eigen::VectorXd c = dec.coefficients(f);
  for (std::size_t j = 0; j < dec.kernel_dim; ++j) c[static_cast<Eigen::Index>(j)] = 0.0;
  const bool with_v = !bundle.potential_vanishes();
  const auto T = static_cast<Eigen::Index>(grid.size());
  constexpr Eigen::Index kBlock = 64;
  double total = 0.0;
  for (Eigen::Index i0 = 0; i0 < T; i0 += kBlock) {
    const Eigen::Index B = std::min(kBlock, T - i0);
    Eigen::MatrixXd A(c.size(), B);
    for (Eigen::Index i = 0; i < B; ++i)
      A.col(i) = c.cwiseProduct((-grid.nodes[static_cast<std::size_t>(i0 + i)] * dec.eigenvalues).array().exp().matrix());
    const Eigen::MatrixXd U = dec.eigenvectors * A;
    for (Eigen::Index i = 0; i < B; ++i) {
      const Field u = U.col(i);
      const double g = lp_norm(bundle.measure(), gradient_field(bundle, u), p);
      double e = g * g;
      if (with_v) {
        const double v = lp_norm(bundle.measure(), potential_squared(bundle, u).cwiseSqrt(), p);
        e += v * v;
      }
      total += grid.weights[static_cast<std::size_t>(i0 + i)] * e;
    }
  }
  return total;
}

OperatorBundle unit_path_bundle(std::size_t n) {
  const WeightedGraph g = build_path_graph(n, 1.0 / static_cast<double>(n));
  return attach_potential(g, Field::Zero(static_cast<Eigen::Index>(n)));
}

}  // namespace lps
