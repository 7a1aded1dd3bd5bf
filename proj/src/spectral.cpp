#include "lps/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <lapacke.h>

#include "lps/error.hpp"

namespace lps {

std::size_t vertex_cap_from_env() {
  if (const char* s = std::getenv("LPS_VERTEX_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultVertexCap;
}

double SpectralDecomposition::lambda_min_positive() const {
  return kernel_dim < size() ? eigenvalues[static_cast<Eigen::Index>(kernel_dim)] : 0.0;
}

Eigen::VectorXd SpectralDecomposition::coefficients(const Field& f) const {
  return eigenvectors.transpose() * f.cwiseProduct(measure);
}

Field SpectralDecomposition::synthesize(const Eigen::VectorXd& c) const { return eigenvectors * c; }

Field SpectralDecomposition::project_off_kernel(const Field& f) const {
  if (kernel_dim == 0) return f;
  const auto k = static_cast<Eigen::Index>(kernel_dim);
  const Eigen::VectorXd c = eigenvectors.leftCols(k).transpose() * f.cwiseProduct(measure);
  return f - eigenvectors.leftCols(k) * c;
}

SpectralDecomposition decompose(const OperatorBundle& bundle, std::size_t vertex_cap,
                                double kernel_rel_tol) {
  const std::size_t n = bundle.dim();
  require(n <= vertex_cap, ErrorCode::ResourceLimit,
          "bundle has " + std::to_string(n) + " vertices, above the vertex cap of " +
              std::to_string(vertex_cap) + " (set LPS_VERTEX_CAP to raise it)");
  require(n >= 1, ErrorCode::InvalidArgument, "empty bundle");

  Eigen::MatrixXd S = bundle.symmetric_matrix();
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  const auto ni = static_cast<lapack_int>(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', ni, S.data(), ni, w.data());
  require(info == 0, ErrorCode::NumericFailure, "dsyevd failed with info " + std::to_string(info));

  SpectralDecomposition dec;
  dec.measure = bundle.measure();
  const Field inv_sqrt_mu = bundle.measure().cwiseSqrt().cwiseInverse();
  dec.eigenvectors = inv_sqrt_mu.asDiagonal() * S;
  // Fix signs: the entry of largest magnitude is positive (first on ties).
  for (Eigen::Index j = 0; j < dec.eigenvectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < dec.eigenvectors.rows(); ++i) {
      const double a = std::abs(S(i, j));
      if (a > best * (1.0 + 1e-12)) {
        best = a;
        arg = i;
      }
    }
    if (S(arg, j) < 0.0) dec.eigenvectors.col(j) *= -1.0;
  }
  dec.eigenvalues = w;
  const double lmax = std::max(std::abs(w.maxCoeff()), std::abs(w.minCoeff()));
  dec.kernel_tolerance = kernel_rel_tol * std::max(lmax, 1e-300);
  dec.kernel_dim = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (std::abs(w[j]) <= dec.kernel_tolerance) {
      dec.eigenvalues[j] = 0.0;
      ++dec.kernel_dim;
    } else {
      break;
    }
  }
  return dec;
}

Field apply_profile(const SpectralDecomposition& dec, const std::function<double(double)>& m,
                    const Field& f) {
  Eigen::VectorXd c = dec.coefficients(f);
  for (Eigen::Index j = 0; j < c.size(); ++j) c[j] *= m(dec.eigenvalues[j]);
  return dec.synthesize(c);
}

Field apply_function(const SpectralDecomposition& dec, const MultiplierFunction& m, const Field& f,
                     bool project_kernel) {
  require(f.size() == static_cast<Eigen::Index>(dec.size()), ErrorCode::InvalidArgument,
          "function size does not match the decomposition");
  Eigen::VectorXd c = dec.coefficients(f);
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double lam = dec.eigenvalues[j];
    if (!m.defined_at(lam)) {
      if (project_kernel && dec.in_kernel(static_cast<std::size_t>(j))) {
        c[j] = 0.0;
        continue;
      }
      std::ostringstream os;
      os << "multiplier " << m.label() << " is undefined at eigenvalue " << lam
         << (dec.in_kernel(static_cast<std::size_t>(j)) ? " (kernel; request kernel projection)" : "");
      fail(ErrorCode::KernelCollision, os.str());
    }
    c[j] *= m(lam);
  }
  return dec.synthesize(c);
}

Field heat(const SpectralDecomposition& dec, double t, const Field& f) {
  require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidArgument, "heat time must be >= 0");
  return apply_function(dec, MultiplierFunction::exp_decay().dilated(t), f);
}

Field poisson(const SpectralDecomposition& dec, double t, const Field& f) {
  require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidArgument, "Poisson time must be >= 0");
  return apply_profile(dec, [t](double lam) { return std::exp(-t * std::sqrt(std::max(lam, 0.0))); }, f);
}

Field inverse_sqrt(const SpectralDecomposition& dec, const Field& f, bool project_kernel) {
  return apply_function(dec, MultiplierFunction::power(-0.5), f, project_kernel);
}

Field sqrt_operator(const SpectralDecomposition& dec, const Field& f) {
  return apply_function(dec, MultiplierFunction::power(0.5), f);
}

Field resolvent_power(const SpectralDecomposition& dec, double t, double delta_prime, const Field& f,
                      bool allow_any_exponent) {
  require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidArgument, "resolvent time must be >= 0");
  return apply_function(
      dec, MultiplierFunction::resolvent_power(delta_prime, allow_any_exponent).dilated(t), f);
}

Field poisson_by_subordination(const SpectralDecomposition& dec, double t, const Field& f) {
  require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidArgument, "Poisson time must be >= 0");
  if (t == 0.0) return f;
  // Substituting s = e^u: integrand t/(2 sqrt(pi)) s^{-1/2} e^{-t^2/(4s)} e^{-s lambda} du.
  const Eigen::VectorXd c = dec.coefficients(f);
  const double lo = std::log(t * t / 4.0) - 8.0;
  const double hi = std::max(std::log(60.0 / std::max(dec.lambda_min_positive(), 1e-12)),
                             std::log(t * t) + 40.0);
  const int nodes = 4001;
  const double du = (hi - lo) / (nodes - 1);
  const double pref = t / (2.0 * std::sqrt(std::acos(-1.0)));
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(c.size());
  for (int i = 0; i < nodes; ++i) {
    const double u = lo + du * i;
    const double s = std::exp(u);
    const double wq = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
    const double base = wq * du * pref / std::sqrt(s) * std::exp(-t * t / (4.0 * s));
    if (base == 0.0) continue;
    for (Eigen::Index j = 0; j < c.size(); ++j) weights[j] += base * std::exp(-s * dec.eigenvalues[j]);
  }
  // The kernel mode integrates to exactly 1; the truncated upper limit loses
  // mass there, so that mode takes its exact value.
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(dec.kernel_dim); ++j) weights[j] = 1.0;
  return dec.synthesize(c.cwiseProduct(weights));
}

namespace {

constexpr char kMagic[8] = {'L', 'P', 'S', 'D', 'E', 'C', '0', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool read_pod(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::filesystem::path DecompositionCache::path_for(const OperatorBundle& bundle) const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << bundle.content_hash() << ".lpsdec";
  return dir_ / os.str();
}

std::optional<SpectralDecomposition> DecompositionCache::load(const OperatorBundle& bundle) const {
  std::ifstream is(path_for(bundle), std::ios::binary);
  if (!is) return std::nullopt;
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) return std::nullopt;
  std::uint64_t hash = 0, n = 0, kdim = 0;
  double ktol = 0.0;
  if (!read_pod(is, hash) || !read_pod(is, n) || !read_pod(is, kdim) || !read_pod(is, ktol)) return std::nullopt;
  if (hash != bundle.content_hash() || n != bundle.dim()) return std::nullopt;
  SpectralDecomposition dec;
  const auto N = static_cast<Eigen::Index>(n);
  dec.eigenvalues.resize(N);
  dec.measure.resize(N);
  dec.eigenvectors.resize(N, N);
  if (!is.read(reinterpret_cast<char*>(dec.eigenvalues.data()), static_cast<std::streamsize>(8 * n)))
    return std::nullopt;
  if (!is.read(reinterpret_cast<char*>(dec.measure.data()), static_cast<std::streamsize>(8 * n)))
    return std::nullopt;
  if (!is.read(reinterpret_cast<char*>(dec.eigenvectors.data()),
               static_cast<std::streamsize>(8 * n * n)))
    return std::nullopt;
  dec.kernel_dim = static_cast<std::size_t>(kdim);
  dec.kernel_tolerance = ktol;
  return dec;
}

void DecompositionCache::store(const OperatorBundle& bundle, const SpectralDecomposition& dec) const {
  std::filesystem::create_directories(dir_);
  const auto final_path = path_for(bundle);
  auto tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write cache file " + tmp.string());
    os.write(kMagic, 8);
    put(os, bundle.content_hash());
    put(os, static_cast<std::uint64_t>(dec.size()));
    put(os, static_cast<std::uint64_t>(dec.kernel_dim));
    put(os, dec.kernel_tolerance);
    const auto n = static_cast<std::streamsize>(dec.size());
    os.write(reinterpret_cast<const char*>(dec.eigenvalues.data()), 8 * n);
    os.write(reinterpret_cast<const char*>(dec.measure.data()), 8 * n);
    os.write(reinterpret_cast<const char*>(dec.eigenvectors.data()), 8 * n * n);
  }
  std::filesystem::rename(tmp, final_path);
}

SpectralDecomposition DecompositionCache::get(const OperatorBundle& bundle, std::size_t vertex_cap) const {
  if (auto hit = load(bundle)) return *hit;
  auto dec = decompose(bundle, vertex_cap);
  store(bundle, dec);
  return dec;
}

}  // namespace lps
