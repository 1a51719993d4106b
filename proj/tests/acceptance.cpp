// Acceptance suite: one PASS/FAIL line per criterion. Experiment-backed
// criteria run the shipped configs; the rest call the library directly.
// Reference values come from the quadrature oracles in oracles.hpp.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "centroidkit/combi.hpp"
#include "centroidkit/cover.hpp"
#include "centroidkit/dual.hpp"
#include "centroidkit/experiments.hpp"
#include "centroidkit/norms.hpp"
#include "centroidkit/sudakov.hpp"
#include "oracles.hpp"

using namespace centroidkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const char* id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s [%s] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentReport run_config(const std::string& name, int jobs) {
  const auto cfg = load_config(fs::path(CENTROIDKIT_CONFIG_DIR) / (name + ".json"), name, std::nullopt, jobs);
  return run(cfg);
}

double value_of(const Json& j) { return j.get<double>(); }

// ---- criteria ------------------------------------------------------------------

void rotinv(const ExperimentReport& rep) {
  bool ok = rep.wall_seconds <= 300.0;
  double worst = 0.0;
  int cells = 0;
  for (const auto& c : rep.cells) {
    const int n = c["n"].get<int>();
    const double p = value_of(c["p"]);
    const auto& r = c["report"];
    const double est = value_of(r["estimate"]["value"]);
    const double oracle = oracle::sphere_inverse_marginal_norm(n, p);
    const double rel = std::abs(est / oracle - 1.0);
    worst = std::max(worst, rel);
    ok = ok && n == 8 && value_of(c["q"]) == p && r["outer_samples"].get<std::int64_t>() >= 2000 &&
         r["saa_samples"].get<std::int64_t>() >= 100'000 && rel <= 0.05;
    ++cells;
  }
  ok = ok && cells == 3;
  report("1", "rotationally invariant closed form", ok,
         std::to_string(cells) + " cells, max |rel| " + fmt(worst) + " <= 0.05, runtime " + fmt(rep.wall_seconds) +
             " s <= 300 s");
}

void z2(const ExperimentReport& rep) {
  bool ok = rep.cells.size() == 2;
  std::string detail;
  for (const auto& c : rep.cells) {
    const double m = value_of(c["second_moment"]);
    const double rel = std::abs(m / 16.0 - 1.0);
    ok = ok && c["n"].get<int>() == 16 && rel <= 0.03;
    detail += c["distribution"].get<std::string>() + " " + fmt(m) + "; ";
  }
  report("2", "isotropic p=2 identity", ok, detail + "within 3% of 16");
}

void largep(const ExperimentReport& rep) {
  bool ok = true;
  int cells = 0;
  double worst = 0.0;
  for (const auto& c : rep.cells) {
    if (c["n"].get<int>() != 4) continue;
    const double hi = value_of(c["report"]["estimate"]["ci_high"]);
    worst = std::max(worst, hi);
    ok = ok && hi <= 10.0;
    ++cells;
  }
  ok = ok && cells == 4;
  report("3", "large-p bound", ok, std::to_string(cells) + " cells, max ci_high " + fmt(worst) + " <= 10");
}

void prop21_exact() {
  const auto start = Clock::now();
  bool ok = true;
  for (int n = 1; n <= 10; ++n) {
    for (int k = 1; k <= 10; ++k) {
      const C2k c = c2k(n, k);
      const C2kBounds b = c2k_bounds(n, k);
      ok = ok && b.lower <= c.exact && c.exact <= b.upper;
    }
  }
  const double secs = seconds_since(start);
  report("4a", "exact c_2k sandwich", ok && secs <= 10.0, "n, k <= 10 in exact arithmetic, " + fmt(secs) + " s <= 10 s");
}

void prop21_moments(const ExperimentReport& rep) {
  bool ok = true;
  int cells = 0;
  double worst = 0.0;
  for (const auto& c : rep.cells) {
    const int n = c["n"].get<int>(), k = c["k"].get<int>();
    const auto& e = c["report"]["estimate"];
    const double est = value_of(e["value"]);
    const double width = (value_of(e["ci_high"]) - value_of(e["ci_low"])) / est;
    const double bound = c2k(n, k).value * (1.0 + 0.05 + width);
    worst = std::max(worst, est / bound);
    ok = ok && est <= bound;
    ++cells;
  }
  ok = ok && cells == 12;
  report("4b", "moments below c_2k", ok, std::to_string(cells) + " cells, max estimate/bound " + fmt(worst));
}

void gaussian_closed_forms() {
  std::mt19937_64 gen(20240605);
  std::normal_distribution<double> normal;
  const auto spec = DistributionSpec::gaussian(8);
  const double g6 = oracle::gaussian_norm(6.0);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd s(8);
    for (int i = 0; i < 8; ++i) s(i) = normal(gen);
    const double v = zp_norm(spec, 6.0, s).value;
    worst = std::max(worst, std::abs(v / (s.norm() / g6) - 1.0));
  }
  const auto cache = sample(DistributionSpec::gaussian(8), 1'000'000, 20240606);
  std::uniform_real_distribution<double> uq(2.0, 6.0), ud(0.0, 8.0);
  int growth_ok = 0;
  double worst_growth = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd t(8);
    for (int i = 0; i < 8; ++i) t(i) = normal(gen);
    const double q = uq(gen);
    const double p = q + ud(gen);
    const double r = moment_growth_ratio(cache, t, p, q);
    worst_growth = std::max(worst_growth, r / std::sqrt(p / q));
    growth_ok += r <= std::sqrt(p / q);
  }
  report("5", "gaussian closed forms", worst <= 0.02 && growth_ok == 20,
         "dual norm max |rel| " + fmt(worst) + " <= 0.02; growth ratio <= sqrt(p/q) on " + std::to_string(growth_ok) +
             "/20 (max ratio/sqrt(p/q) " + fmt(worst_growth) + ")");
}

void hitczenko() {
  const auto start = Clock::now();
  std::mt19937_64 gen(20240607);
  std::uniform_int_distribution<int> dim(1, 14), order(1, 10);
  std::normal_distribution<double> normal;
  double lo = INFINITY, hi = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(gen);
    const double p = order(gen);
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = normal(gen);
    const double ratio = rademacher_norm_exact(a, p).value / hitczenko_surrogate(a, p);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const double secs = seconds_since(start);
  report("6", "hitczenko equivalence", lo >= 0.125 && hi <= 8.0 && secs <= 120.0,
         "ratios in [" + fmt(lo) + ", " + fmt(hi) + "] within [1/8, 8], " + fmt(secs) + " s <= 120 s");
}

void exponential_example() {
  const auto spec = DistributionSpec::exponential(16);
  const auto rows = exponential_witness_lower(spec, 4.0, {0.5, 1.0, 2.0}, 1'000'000, 20240608);
  bool ok = rows.size() == 3;
  std::string detail;
  for (const auto& r : rows) {
    const double analytic = std::exp(-r.t * 8.0 / std::sqrt(2.0));
    ok = ok && r.ci_high >= analytic;
    detail += "t=" + fmt(r.t) + " freq " + fmt(r.frequency) + " >= " + fmt(analytic) + "; ";
  }
  const double q = 8.0;
  const auto m = exponential_witness_moment(spec, 4.0, q, 1'000'000, 20240609);
  const double witness = 0.5 * std::pow(oracle::exponential_abs_moment(q), 1.0 / q);
  const double analytic = 0.5 * std::pow(std::tgamma(q + 1.0) * std::pow(2.0, -q / 2.0), 1.0 / q);
  ok = ok && witness >= analytic * (1.0 - 1e-12) && m.exact >= analytic * (1.0 - 1e-12);
  report("7", "exponential example", ok,
         detail + "witness moment " + fmt(witness) + " >= " + fmt(analytic) + " (MC " + fmt(m.empirical.value) + ")");
}

void entropy_pipeline() {
  const auto spec = DistributionSpec::gaussian(8);
  const double eps = 1.0 / oracle::gaussian_norm(4.0);
  const auto net = greedy_net(BodyOracle::mp_ball(spec, 4.0), eps, 20240610);
  const double bound = entropy_to_zp_bound(spec, 4.0, eps, net);
  DualSolveOptions opts;
  const auto measured = zp_moment(spec, 4.0, 2.0, 500, opts, 20240611);
  report("8", "entropy to Z_p pipeline", bound >= measured.estimate.value,
         "bound " + fmt(bound) + " (N = " + std::to_string(net.count) + ") >= measured " +
             fmt(measured.estimate.value));
}

void sparse_sudakov() {
  bool ok = true;
  std::string detail;
  std::map<int, double> cx;
  SudakovBudgets budgets;
  budgets.samples = 10'000;
  for (int n : {16, 64, 256}) {
    const auto spec = DistributionSpec::sparse(n);
    const auto T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const auto rows = sample(spec, 10'000, 20240612 + n);
    for (Eigen::Index r = 0; r < rows.count(); ++r) ok = ok && sup_of_realization(T, rows.data().row(r).transpose()) == 1.0;
    const auto rep = minoration_constant_lower(spec, T, default_eps_grid(T.diameter()), budgets, 20240613);
    ok = ok && rep.sup_estimate.value == 1.0 && rep.sup_estimate.ci_low == 1.0 && rep.sup_estimate.ci_high == 1.0;
    const double root = std::sqrt(static_cast<double>(n));
    const double optimum = oracle::sparse_volume_optimum(n);
    ok = ok && rep.cx_lower / root >= 0.2 && rep.cx_lower <= optimum * (1.0 + 1e-9);
    cx[n] = rep.cx_lower;
    detail += "n=" + std::to_string(n) + " cx/sqrt(n) " + fmt(rep.cx_lower / root) + " (oracle " + fmt(optimum / root) +
              "); ";
  }
  const double growth = cx[64] / cx[16];
  ok = ok && growth >= 1.5;
  report("9", "sparse Sudakov example", ok, detail + "growth 64/16 " + fmt(growth) + " >= 1.5");
}

void sweep(const ExperimentReport& rep) {
  double worst = 0.0;
  int closed = 0, closed_ok = 0;
  for (const auto& c : rep.cells) {
    const std::string family = c["family"].get<std::string>();
    const int n = c["n"].get<int>();
    const double p = value_of(c["p"]);
    worst = std::max({worst, value_of(c["ratio_q2"]), value_of(c["ratio_qp"])});
    for (const auto& [key, q] : {std::pair{"moment_q2", 2.0}, std::pair{"moment_qp", p}}) {
      std::optional<double> oracle_value;
      if (family == "GaussianIsotropic") oracle_value = oracle::chi_norm(n, q) / oracle::gaussian_norm(p);
      else if (family == "UniformSphere") oracle_value = oracle::sphere_inverse_marginal_norm(n, p);
      else if (p == 2.0 && q == 2.0 && family != "RandomLinearImage") oracle_value = std::sqrt(static_cast<double>(n));
      if (!oracle_value) continue;
      ++closed;
      closed_ok += std::abs(value_of(c[key]["value"]) / *oracle_value - 1.0) <= 0.05;
    }
  }
  const bool ok = rep.cells.size() == 60 && worst <= 5.0 && closed == closed_ok && rep.passed();
  report("10", "conjecture sweep", ok,
         std::to_string(rep.cells.size()) + " cells, max ratio " + fmt(worst) + " <= 5; closed-form cells " +
             std::to_string(closed_ok) + "/" + std::to_string(closed) + " within 5%");
}

}  // namespace

int main() {
  const auto start = Clock::now();
  const fs::path root = fs::temp_directory_path() / "centroidkit_acceptance";
  fs::remove_all(root);

  // First pass of the suite, single worker.
  std::map<std::string, ExperimentReport> first;
  for (const auto& name : experiment_names()) {
    first.emplace(name, run_config(name, 1));
    write_report(first.at(name), root / "a" / name);
  }

  rotinv(first.at("verify-rotinv"));
  z2(first.at("verify-z2"));
  largep(first.at("remark-largep"));
  prop21_exact();
  prop21_moments(first.at("verify-prop21"));
  gaussian_closed_forms();
  hitczenko();
  exponential_example();
  entropy_pipeline();
  sparse_sudakov();
  sweep(first.at("sweep-conjecture"));

  // Second pass with a different worker count; reports must match byte for byte.
  int identical = 0;
  std::string mismatched;
  for (const auto& name : experiment_names()) {
    write_report(run_config(name, 3), root / "b" / name);
    if (slurp(root / "a" / name / "report.json") == slurp(root / "b" / name / "report.json")) ++identical;
    else mismatched += " " + name;
  }
  const int total = static_cast<int>(experiment_names().size());
  report("11", "determinism", identical == total,
         std::to_string(identical) + "/" + std::to_string(total) + " report.json files identical across jobs 1 and 3" +
             (mismatched.empty() ? "" : "; differ:" + mismatched));

  std::printf("acceptance: %d failure(s), %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
