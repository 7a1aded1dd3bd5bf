#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "lps/error.hpp"
#include "lps/graph.hpp"
#include "lps/verify.hpp"

namespace lps {

nlohmann::json SuiteOptions::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["seed"] = seed;
  j["budget"] = budget;
  j["path_sizes"] = path_sizes;
  j["grid_sides"] = grid_sides;
  j["floor"] = floor;
  j["shen"] = {{"n_dim", shen.n_dim}, {"q0", shen.q0}, {"refinements", shen.refinements},
               {"r_max", shen.r_max}, {"growth_threshold", shen.growth_threshold},
               {"flat_threshold", shen.flat_threshold}};
  j["connected_sum"] = {{"n_dim", connected_sum.n_dim}, {"p", connected_sum.p},
                        {"control_p", connected_sum.control_p}, {"sizes", connected_sum.sizes},
                        {"neck", connected_sum.neck}, {"budget", connected_sum.budget},
                        {"growth_threshold", connected_sum.growth_threshold},
                        {"flat_threshold", connected_sum.flat_threshold}};
  return j;
}

SuiteOptions SuiteOptions::named(const std::string& name, std::uint64_t seed) {
  SuiteOptions o;
  o.name = name;
  o.seed = seed;
  if (name == "default") return o;
  if (name == "quick") {
    o.budget = 12;
    o.path_sizes = {8, 16, 32};
    o.grid_sides = {6, 8, 10};
    o.shen.refinements = {50, 100, 200};
    o.connected_sum.sizes = {8, 12, 16};
    o.connected_sum.budget = 12;
    return o;
  }
  fail(ErrorCode::Validation, "unknown suite '" + name + "' (expected default or quick)");
}

namespace {

using Job = std::function<CheckResult()>;

std::vector<Job> suite_jobs(const SuiteOptions& o) {
  const auto s = o.seed;
  std::vector<Job> jobs;
  jobs.push_back([=] { return check_stein_upper(o.path_sizes, 2.0, o.budget, s); });
  jobs.push_back([=] { return check_stein_upper(o.path_sizes, 1.5, o.budget, s); });
  jobs.push_back([=] { return check_uniform_bound(o.grid_sides, 2.0, o.budget, s); });
  jobs.push_back([=] { return check_lps_stability(o.path_sizes, 1.5, o.budget, s); });
  jobs.push_back([=] {
    return check_riesz({o.path_sizes.front(), o.path_sizes[o.path_sizes.size() / 2]}, o.budget, s);
  });
  jobs.push_back([=] { return check_lower_bound_q(o.path_sizes, 2.0, o.budget, s, o.floor); });
  jobs.push_back([=] { return check_lower_bound_q(o.path_sizes, 4.0, o.budget, s, o.floor); });
  jobs.push_back([=] {
    const OperatorBundle b = unit_path_bundle(o.path_sizes.front());
    const SpectralDecomposition dec = decompose(b);
    return check_reverse_duality(b, dec, 2.0, {MultiplierFunction::exp_decay()}, o.budget, s, o.floor);
  });
  jobs.push_back([=] {
    const OperatorBundle b = unit_path_bundle(o.path_sizes.front());
    const SpectralDecomposition dec = decompose(b);
    return check_reverse_duality(b, dec, 4.0,
                                 {tabulate(MultiplierFunction::bump(), 0.5, 2.0, 129),
                                  tabulate(MultiplierFunction::triangle(), 0.5, 2.0, 129)},
                                 o.budget, s, o.floor);
  });
  jobs.push_back([=] { return check_Q_lower(o.path_sizes, 2.0, o.budget, s, o.floor); });
  jobs.push_back([=] { return check_Q_lower(o.path_sizes, 4.0, o.budget, s, o.floor); });
  jobs.push_back([=] { return check_hinf_single_mode(o.path_sizes); });
  jobs.push_back([=] { return check_shen_counterexample(o.shen); });
  jobs.push_back([=] { return check_connected_sum_growth(o.connected_sum, s); });
  jobs.push_back([=] { return check_equivalence_study(2.0, o.budget, s); });
  jobs.push_back([=] { return check_equivalence_study(1.5, o.budget, s); });
  jobs.push_back([=] { return check_reverse_holder(s); });
  return jobs;
}

const char* kJobIds[] = {"stein_upper",      "stein_upper",         "uniform_bound",    "lps_rbound_stability",
                         "riesz_p2",         "lower_bound_q",       "lower_bound_q",    "reverse_duality",
                         "reverse_duality",  "Q_lower",             "Q_lower",          "hinf_single_mode",
                         "shen_counterexample", "connected_sum_growth", "equivalence_study",
                         "equivalence_study", "reverse_holder"};

}  // namespace

std::vector<CheckResult> run_suite(const SuiteOptions& o) {
  const std::vector<Job> jobs = suite_jobs(o);
  std::vector<std::optional<CheckResult>> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        out[i] = jobs[i]();
      } catch (const Error& e) {
        CheckResult r = CheckResult::qualitative(kJobIds[i], 0.0);
        r.set_inputs(std::string(kJobIds[i]) + ";error");
        r.expect(false, "error[" + std::string(to_string(e.code())) + "]: " + e.what());
        out[i] = std::move(r);
      }
      out[i]->runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  unsigned n = o.jobs ? o.jobs : std::max(1U, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<CheckResult> results;
  for (auto& r : out) results.push_back(std::move(*r));
  return results;
}

bool any_violation(const std::vector<CheckResult>& results) {
  return std::any_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.verdict() == Verdict::Violation; });
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string suite_csv(const SuiteOptions& opts, const std::vector<CheckResult>& results) {
  const std::string digest = digest_hex(opts.to_json().dump());
  std::ostringstream os;
  os << "check_id,statement,verdict,tolerance,inputs_digest,measured,failures,options_digest,version\n";
  for (const auto& r : results) {
    std::string measured, failures;
    for (const auto& [k, v] : r.measured()) measured += (measured.empty() ? "" : ";") + k + "=" + fmt(v);
    for (const auto& f : r.failures()) failures += (failures.empty() ? "" : ";") + f;
    os << csv_field(r.id()) << ',' << to_string(r.statement()) << ',' << to_string(r.verdict()) << ','
       << fmt(r.tolerance()) << ',' << r.inputs_digest() << ',' << csv_field(measured) << ','
       << csv_field(failures) << ',' << digest << ',' << csv_field(version_string()) << '\n';
  }
  return os.str();
}

nlohmann::json suite_json(const SuiteOptions& opts, const std::vector<CheckResult>& results) {
  nlohmann::json j;
  j["version"] = version_string();
  j["options"] = opts.to_json();
  j["options_digest"] = digest_hex(opts.to_json().dump());
  j["results"] = nlohmann::json::array();
  for (const auto& r : results) j["results"].push_back(r.to_json());
  j["any_violation"] = any_violation(results);
  j["out_of_scope"] = {"weak-(1,1) endpoint behaviour", "the precise epsilon in the q* + epsilon range"};
  return j;
}

void write_suite_reports(const std::filesystem::path& dir, const SuiteOptions& opts,
                         const std::vector<CheckResult>& results) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "suite.csv", std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + (dir / "suite.csv").string());
    os << suite_csv(opts, results);
  }
  std::ofstream os(dir / "suite.json", std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot write " + (dir / "suite.json").string());
  os << suite_json(opts, results).dump(2) << '\n';
}

}  // namespace lps
