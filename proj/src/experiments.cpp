#include "centroidkit/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "centroidkit/combi.hpp"
#include "centroidkit/cover.hpp"
#include "centroidkit/dual.hpp"
#include "centroidkit/error.hpp"
#include "centroidkit/norms.hpp"
#include "centroidkit/parallel.hpp"
#include "centroidkit/rng.hpp"
#include "centroidkit/stats.hpp"
#include "centroidkit/sudakov.hpp"

namespace centroidkit {

bool ExperimentReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

Json ExperimentReport::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["config"] = config;
  j["cells"] = cells;
  j["summary"] = summary;
  Json vs = Json::array();
  for (const auto& v : verdicts) vs.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["verdicts"] = vs;
  j["passed"] = passed();
  return j;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "verify-rotinv", "verify-z2",   "remark-largep", "verify-prop21",  "c2k-table",      "hitczenko",      "sweep-conjecture",
      "unclogcon",     "exp-example", "entropy-zp",    "prop36",         "sudakov-sparse", "sudakov-uncond", "orderstat"};
  return names;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- config access -------------------------------------------------------------

class Reader {
 public:
  Reader(const Json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const char* key) const { return doc_.contains(key); }
  const Json& at(const char* key) const { return doc_.at(key); }

  double number(const char* key, double fallback, double lo = -kInf, double hi = kInf) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    return check(key, v.get<double>(), lo, hi);
  }

  std::int64_t integer(const char* key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    return static_cast<std::int64_t>(check(key, static_cast<double>(v.get<std::int64_t>()), static_cast<double>(lo),
                                           static_cast<double>(hi)));
  }

  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!doc_.at(key).is_boolean()) throw ConfigError(path(key) + " must be true or false");
    return doc_.at(key).get<bool>();
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!doc_.at(key).is_string()) throw ConfigError(path(key) + " must be a string");
    return doc_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::vector<double> fallback, double lo = -kInf,
                              double hi = kInf) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(path(key) + " must be a non-empty array of numbers");
    std::vector<double> out;
    for (const Json& e : v) {
      if (!e.is_number()) throw ConfigError(path(key) + " must contain numbers only");
      out.push_back(check(key, e.get<double>(), lo, hi));
    }
    return out;
  }

  std::vector<int> integers(const char* key, std::vector<int> fallback, int lo, int hi) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(path(key) + " must be a non-empty array of integers");
    std::vector<int> out;
    for (const Json& e : v) {
      if (!e.is_number_integer()) throw ConfigError(path(key) + " must contain integers only");
      out.push_back(static_cast<int>(check(key, static_cast<double>(e.get<std::int64_t>()), lo, hi)));
    }
    return out;
  }

  Reader child(const char* key) const {
    static const Json empty = Json::object();
    return has(key) ? Reader(doc_.at(key), path(key)) : Reader(empty, path(key));
  }

  std::string path(const char* key) const { return where_ + "." + key; }

 private:
  double check(const char* key, double x, double lo, double hi) const {
    if (!std::isfinite(x) || x < lo || x > hi) {
      std::ostringstream os;
      os << path(key) << " = " << format_number(x) << " is outside [" << format_number(lo) << ", "
         << format_number(hi) << "]";
      throw ConfigError(os.str());
    }
    return x;
  }

  const Json& doc_;
  std::string where_;
};

struct Ctx {
  const ExperimentConfig& config;
  Reader root;
  Reader grid;
  Reader budgets;
  Reader tol;

  explicit Ctx(const ExperimentConfig& c)
      : config(c),
        root(c.raw, "config"),
        grid(root.child("grid")),
        budgets(root.child("budgets")),
        tol(root.child("tolerances")) {}

  std::uint64_t seed() const { return config.seed; }
  int jobs() const { return config.jobs; }

  DualSolveOptions dual(std::int64_t saa_default, bool prefer_exact_default) const {
    DualSolveOptions o;
    o.sample_budget = budgets.integer("saa", saa_default, 100, 10'000'000);
    o.starts = static_cast<int>(budgets.integer("starts", o.starts, 1, 64));
    o.max_iters = static_cast<int>(budgets.integer("max_iters", o.max_iters, 1, 100'000));
    o.resamples = static_cast<int>(budgets.integer("resamples", o.resamples, 0, 100'000));
    o.prefer_exact = budgets.flag("prefer_exact", prefer_exact_default);
    o.jobs = config.jobs;
    return o;
  }

  std::int64_t outer(std::int64_t fallback) const { return budgets.integer("outer", fallback, 100, 100'000'000); }
};

// Builds the list of laws from "distributions" (or "distribution"); entries
// without "n" are expanded over the n grid.
DistributionSpec random_linear_image(const Json& entry, int n, std::uint64_t seed);

std::vector<DistributionSpec> distributions(const Ctx& ctx, const std::vector<std::string>& default_families,
                                            const std::vector<int>& default_ns, int max_n = 4096) {
  const std::vector<int> ns = ctx.grid.integers("n", default_ns, 1, max_n);
  Json list = Json::array();
  if (ctx.root.has("distributions")) {
    list = ctx.root.at("distributions");
    if (!list.is_array() || list.empty()) throw ConfigError("config.distributions must be a non-empty array");
  } else if (ctx.root.has("distribution")) {
    list.push_back(ctx.root.at("distribution"));
  } else {
    for (const auto& f : default_families) list.push_back({{"family", f}});
  }
  std::vector<DistributionSpec> out;
  for (const Json& entry : list) {
    if (!entry.is_object() || !entry.contains("family") || !entry.at("family").is_string()) {
      throw ConfigError("each distribution needs a string 'family'");
    }
    const auto family = entry.at("family").get<std::string>();
    const bool sized = entry.contains("n") || entry.contains("marginals") || entry.contains("matrix");
    if (family == "RandomLinearImage") {
      const std::vector<int> own = entry.contains("n") ? std::vector<int>{entry.at("n").get<int>()} : ns;
      for (int n : own) out.push_back(random_linear_image(entry, n, ctx.seed()));
    } else if (sized) {
      out.push_back(spec_from_json(entry));
    } else {
      for (int n : ns) {
        Json e = entry;
        e["n"] = n;
        out.push_back(spec_from_json(e));
      }
    }
  }
  for (const auto& s : out) {
    if (s.dim() > max_n) throw ConfigError("dimension of " + s.describe() + " exceeds this experiment's limit");
  }
  return out;
}

DistributionSpec random_linear_image(const Json& entry, int n, std::uint64_t seed) {
  const Reader r(entry, "distribution");
  const double kappa = r.number("max_condition", 10.0, 1.0, 1e6);
  Json base = entry.contains("base") ? entry.at("base") : Json{{"family", "ExponentialProduct"}};
  if (!base.is_object()) throw ConfigError("RandomLinearImage.base must be an object");
  base["n"] = n;
  const DistributionSpec base_spec = spec_from_json(base);
  Philox rng(derive_seed(seed, "random_linear_image"), static_cast<std::uint64_t>(n));
  auto orthogonal = [&] {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) g(i, k) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return Eigen::MatrixXd(qr.householderQ());
  };
  const Eigen::MatrixXd q1 = orthogonal();
  const Eigen::MatrixXd q2 = orthogonal();
  Eigen::VectorXd sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = n == 1 ? 1.0 : std::pow(kappa, static_cast<double>(i) / (n - 1));
  return DistributionSpec::linear_image(q1 * sigma.asDiagonal() * q2.transpose(), base_spec);
}

// Runs cells in index order; cell results are stored by index so the report
// does not depend on the worker count.
std::vector<Json> run_cells(std::size_t count, int jobs, const std::function<Json(std::size_t, int)>& cell) {
  std::vector<Json> out(count);
  if (jobs <= 0) jobs = default_jobs();
  const int outer_jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
  const int inner_jobs = std::max(1, jobs / std::max(1, outer_jobs));
  parallel_for(count, outer_jobs, [&](std::size_t i) { out[i] = cell(i, inner_jobs); });
  return out;
}

std::uint64_t cell_seed(const Ctx& ctx, std::size_t i) { return derive_seed(ctx.seed(), StreamTag::experiment, i); }

std::string fmt(double x) { return format_number(x); }

double rel_error(double value, double oracle) { return (value - oracle) / oracle; }

std::string pq_label(double p, double q) { return "p=" + fmt(p) + " q=" + fmt(q); }

// ||X_1||_p for laws with a closed-form marginal.
double marginal_norm(const DistributionSpec& spec, double p) {
  return std::pow(marginal_abs_moment(spec, 0, p), 1.0 / p);
}

// Closed forms of (E||X||_{Z_p}^q)^{1/q}. For X = R U, ||x||_{Z_p} = |x| / ||X_1||_p;
// for any law E||X||^2_{Z_2} = n.
std::optional<double> closed_form_moment(const DistributionSpec& spec, double p, double q) {
  const int n = spec.dim();
  if (p == 2.0 && q == 2.0) return std::sqrt(static_cast<double>(n));
  if (spec.family() == Family::UniformSphere) {
    return std::pow(spec.radial().moment(q, n), 1.0 / q) / marginal_norm(spec, p);
  }
  if (spec.family() == Family::GaussianIsotropic) {
    return std::pow(RadialLaw::chi().moment(q, n), 1.0 / q) / marginal_norm(spec, p);
  }
  return std::nullopt;
}

Json estimate_row(const NormEstimate& e) {
  return {{"value", e.value}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}};
}

NormEstimate estimate_from(const Json& j) {
  NormEstimate e;
  e.value = j.at("value").get<double>();
  e.ci_low = j.at("ci_low").get<double>();
  e.ci_high = j.at("ci_high").get<double>();
  return e;
}

void add_verdict(ExperimentReport& rep, std::string name, bool pass, std::string detail) {
  rep.verdicts.push_back({std::move(name), pass, std::move(detail)});
}

// ---- verify-rotinv -------------------------------------------------------------

void verify_rotinv(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"UniformSphere"}, {8}, 64);
  for (const auto& s : specs) {
    if (s.family() != Family::UniformSphere) throw ConfigError("verify-rotinv needs UniformSphere laws");
  }
  const auto ps = ctx.grid.numbers("p", {2.0, 4.0, 8.0}, 2.0, 64.0);
  const bool q_is_p = !ctx.grid.has("q");
  const auto qs = ctx.grid.numbers("q", {2.0}, 1.0, 256.0);
  const double tol = ctx.tol.number("rel", 0.05, 0.0, 1.0);
  const std::int64_t outer = ctx.outer(2000);
  const DualSolveOptions base = ctx.dual(100'000, false);

  struct Cell {
    std::size_t d;
    double p, q;
  };
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (double p : ps) {
      if (q_is_p) {
        cells.push_back({d, p, p});
      } else {
        for (double q : qs) cells.push_back({d, p, q});
      }
    }
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const Cell& c = cells[i];
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const auto r = zp_moment(specs[c.d], c.p, c.q, outer, opts, cell_seed(ctx, i));
    const double oracle = *closed_form_moment(specs[c.d], c.p, c.q);
    return Json{{"distribution", specs[c.d].describe()}, {"n", specs[c.d].dim()}, {"p", c.p},     {"q", c.q},
                {"oracle", oracle},                    {"rel_error", rel_error(r.estimate.value, oracle)},
                {"report", to_json(r)}};
  });

  Table t("rotinv", {"distribution", "n", "p", "q", "estimate", "ci_low", "ci_high", "oracle", "rel_error", "pass"});
  std::map<std::string, Series> est, ora;
  double worst = 0.0;
  for (const Json& r : results) {
    const auto e = estimate_from(r["report"]["estimate"]);
    const double re = r["rel_error"].get<double>();
    const bool pass = std::abs(re) <= tol;
    worst = std::max(worst, std::abs(re));
    const auto dist = r["distribution"].get<std::string>();
    t.add({dist, r["n"].get<int>(), r["p"].get<double>(), r["q"].get<double>(), e.value, e.ci_low, e.ci_high,
           r["oracle"].get<double>(), re, pass});
    add_verdict(rep, "rotinv " + dist + " " + pq_label(r["p"], r["q"]), pass,
                "estimate " + fmt(e.value) + " vs oracle " + fmt(r["oracle"].get<double>()) + ", |rel| <= " + fmt(tol));
    est[dist].label = dist + " estimate";
    est[dist].x.push_back(r["p"]);
    est[dist].y.push_back(e.value);
    ora[dist].label = dist + " closed form";
    ora[dist].dashed = true;
    ora[dist].x.push_back(r["p"]);
    ora[dist].y.push_back(r["oracle"]);
    rep.cells.push_back(r);
  }
  rep.summary["max_abs_rel_error"] = worst;
  rep.summary["tolerance"] = tol;
  rep.tables.push_back(std::move(t));
  Plot plot{"Rotation-invariant closed form", "p", "moment of Z_p norm", true, false, {}};
  for (auto& [k, s] : est) {
    s.markers = true;
    plot.series.push_back(s);
    plot.series.push_back(ora[k]);
  }
  rep.plots.emplace_back("rotinv", std::move(plot));
}

// ---- verify-z2 -----------------------------------------------------------------

void verify_z2(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"GaussianIsotropic", "ExponentialProduct"}, {16}, 256);
  const double tol = ctx.tol.number("rel", 0.03, 0.0, 1.0);
  const std::int64_t outer = ctx.outer(5000);
  const DualSolveOptions base = ctx.dual(100'000, true);
  const auto results = run_cells(specs.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const auto r = zp_moment(specs[i], 2.0, 2.0, outer, opts, cell_seed(ctx, i));
    const double second = r.estimate.value * r.estimate.value;
    const double n = specs[i].dim();
    return Json{{"distribution", specs[i].describe()},
                {"n", specs[i].dim()},
                {"second_moment", second},
                {"ci_low", r.estimate.ci_low * r.estimate.ci_low},
                {"ci_high", r.estimate.ci_high * r.estimate.ci_high},
                {"oracle", n},
                {"rel_error", rel_error(second, n)},
                {"report", to_json(r)}};
  });
  Table t("z2", {"distribution", "n", "second_moment", "ci_low", "ci_high", "oracle", "rel_error", "pass"});
  for (const Json& r : results) {
    const double re = r["rel_error"];
    const bool pass = std::abs(re) <= tol;
    t.add({r["distribution"].get<std::string>(), r["n"].get<int>(), r["second_moment"].get<double>(),
           r["ci_low"].get<double>(), r["ci_high"].get<double>(), r["oracle"].get<double>(), re, pass});
    add_verdict(rep, "z2 " + r["distribution"].get<std::string>(), pass,
                "E||X||^2 = " + fmt(r["second_moment"]) + " vs n = " + fmt(r["oracle"]) + ", |rel| <= " + fmt(tol));
    rep.cells.push_back(r);
  }
  rep.tables.push_back(std::move(t));
}

// ---- remark-largep -------------------------------------------------------------

void remark_largep(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"GaussianIsotropic", "ExponentialProduct"}, {4}, 32);
  const auto ps = ctx.grid.numbers("p", {4.0, 8.0}, 2.0, 64.0);
  const double bound = ctx.tol.number("bound", 10.0, 0.0, kInf);
  const std::int64_t outer = ctx.outer(1000);
  const DualSolveOptions base = ctx.dual(100'000, true);
  std::vector<std::pair<std::size_t, double>> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (double p : ps) cells.emplace_back(d, p);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto [d, p] = cells[i];
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const auto r = zp_moment(specs[d], p, p, outer, opts, cell_seed(ctx, i));
    return Json{{"distribution", specs[d].describe()}, {"n", specs[d].dim()}, {"p", p}, {"report", to_json(r)}};
  });
  Table t("largep", {"distribution", "n", "p", "estimate", "ci_low", "ci_high", "bound", "applies", "pass"});
  for (const Json& r : results) {
    const auto e = estimate_from(r["report"]["estimate"]);
    const bool applies = r["p"].get<double>() >= r["n"].get<double>();
    const bool pass = e.ci_high <= bound;
    t.add({r["distribution"].get<std::string>(), r["n"].get<int>(), r["p"].get<double>(), e.value, e.ci_low, e.ci_high,
           bound, applies, pass});
    if (applies) {
      add_verdict(rep, "largep " + r["distribution"].get<std::string>() + " p=" + fmt(r["p"]), pass,
                  "ci_high " + fmt(e.ci_high) + " <= " + fmt(bound));
    }
    rep.cells.push_back(r);
  }
  rep.tables.push_back(std::move(t));
}

// ---- verify-prop21 -------------------------------------------------------------

void verify_prop21(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"ExponentialProduct", "RademacherProduct"}, {2, 4}, 16);
  for (const auto& s : specs) {
    if (!s.flags().is_unconditional) throw ConfigError("verify-prop21 needs unconditional laws");
  }
  const auto ks = ctx.grid.integers("k", {1, 2, 3}, 1, 10);
  const double slack = ctx.tol.number("slack", 0.05, 0.0, 1.0);
  const std::int64_t outer = ctx.outer(2000);
  const DualSolveOptions base = ctx.dual(100'000, true);
  std::vector<std::pair<std::size_t, int>> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (int k : ks) cells.emplace_back(d, k);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto [d, k] = cells[i];
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const auto r = zp_moment(specs[d], 2.0 * k, 2.0 * k, outer, opts, cell_seed(ctx, i));
    const double c = c2k(specs[d].dim(), k).value;
    return Json{{"distribution", specs[d].describe()}, {"n", specs[d].dim()}, {"k", k}, {"c2k", c},
                {"report", to_json(r)}};
  });
  Table t("prop21", {"distribution", "n", "k", "estimate", "ci_low", "ci_high", "c2k", "ratio", "limit", "pass"});
  std::map<std::string, Series> curves;
  for (const Json& r : results) {
    const auto e = estimate_from(r["report"]["estimate"]);
    const double c = r["c2k"];
    const double limit = c * (1.0 + slack + e.relative_ci_width());
    const bool pass = e.value <= limit;
    const auto dist = r["distribution"].get<std::string>();
    t.add({dist, r["n"].get<int>(), r["k"].get<int>(), e.value, e.ci_low, e.ci_high, c, e.value / c, limit, pass});
    add_verdict(rep, "prop21 " + dist + " k=" + fmt(r["k"]), pass, "estimate " + fmt(e.value) + " <= " + fmt(limit));
    curves[dist].label = dist;
    curves[dist].x.push_back(r["k"]);
    curves[dist].y.push_back(e.value / c);
    rep.cells.push_back(r);
  }
  rep.tables.push_back(std::move(t));
  Plot plot{"Even-moment bound", "k", "estimate / c_2k", false, false, {}};
  for (auto& [k, s] : curves) plot.series.push_back(s);
  rep.plots.emplace_back("prop21", std::move(plot));
}

// ---- c2k-table -----------------------------------------------------------------

void c2k_table(const Ctx& ctx, ExperimentReport& rep) {
  const auto ns = ctx.grid.integers("n", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 1, 64);
  const auto ks = ctx.grid.integers("k", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 1, 64);
  const std::uint64_t direct_limit =
      static_cast<std::uint64_t>(ctx.budgets.integer("direct_terms", 20'000, 0, 100'000'000));
  Table t("c2k", {"n", "k", "c2k", "c2k_pow", "lower", "upper", "ratio_to_sqrt", "sandwich", "direct_agrees"});
  std::vector<std::pair<int, int>> cells;
  for (int n : ns) {
    for (int k : ks) cells.emplace_back(n, k);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int) {
    const auto [n, k] = cells[i];
    const C2k c = c2k(n, k);
    const C2kBounds b = c2k_bounds(n, k);
    const bool sandwich = b.lower <= c.exact && c.exact <= b.upper;
    Json j{{"n", n},
           {"k", k},
           {"c2k", c.value},
           {"c2k_pow", c.exact.get_str()},
           {"lower", b.lower.get_str()},
           {"upper", b.upper.get_str()},
           {"ratio_to_sqrt", c.value / std::sqrt((n + k) / static_cast<double>(k))},
           {"sandwich", sandwich}};
    if (multiindex_count(n, k) <= direct_limit) j["direct_agrees"] = c2k_direct(n, k) == c.exact;
    return j;
  });
  std::vector<std::string> failures;
  std::map<int, Series> curves;
  for (const Json& r : results) {
    const bool direct = !r.contains("direct_agrees") || r["direct_agrees"].get<bool>();
    t.add({r["n"].get<int>(), r["k"].get<int>(), r["c2k"].get<double>(), r["c2k_pow"].get<std::string>(),
           r["lower"].get<std::string>(), r["upper"].get<std::string>(), r["ratio_to_sqrt"].get<double>(),
           r["sandwich"].get<bool>(), r.contains("direct_agrees") ? Table::Cell(direct) : Table::Cell("")});
    if (!r["sandwich"].get<bool>() || !direct) failures.push_back("n=" + fmt(r["n"]) + " k=" + fmt(r["k"]));
    const int n = r["n"];
    curves[n].label = "n=" + std::to_string(n);
    curves[n].x.push_back(r["k"]);
    curves[n].y.push_back(r["c2k"]);
    rep.cells.push_back(r);
  }
  std::string detail = std::to_string(results.size()) + " cells checked in exact arithmetic";
  for (const auto& f : failures) detail += "; failed " + f;
  add_verdict(rep, "c2k sandwich", failures.empty(), detail);
  rep.tables.push_back(std::move(t));
  Plot plot{"c_2k", "k", "c_2k", false, false, {}};
  for (auto& [n, s] : curves) plot.series.push_back(s);
  rep.plots.emplace_back("c2k", std::move(plot));
}

// ---- hitczenko -----------------------------------------------------------------

Eigen::VectorXd random_coefficients(int n, std::size_t trial, std::uint64_t seed) {
  Philox rng(derive_seed(seed, "hitczenko"), trial);
  Eigen::VectorXd a(n);
  switch (trial % 5) {
    case 0:
      for (int i = 0; i < n; ++i) a[i] = rng.normal();
      break;
    case 1:
      for (int i = 0; i < n; ++i) a[i] = rng.uniform() - 0.5;
      break;
    case 2: {
      const double r = 0.3 + 0.65 * rng.uniform();
      for (int i = 0; i < n; ++i) a[i] = rng.sign() * std::pow(r, i);
      break;
    }
    case 3:
      for (int i = 0; i < n; ++i) a[i] = rng.uniform() < 0.25 ? 10.0 * rng.normal() : 0.1 * rng.normal();
      break;
    default:
      for (int i = 0; i < n; ++i) a[i] = rng.sign();
      break;
  }
  if (a.isZero(0.0)) a[0] = 1.0;
  return a;
}

void hitczenko(const Ctx& ctx, ExperimentReport& rep) {
  const auto ns = ctx.grid.integers("n", {4, 6, 8, 10, 12, 14}, 1, kRademacherMaxDim);
  const auto ps = ctx.grid.numbers("p", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 1.0, 64.0);
  const auto trials = static_cast<std::size_t>(ctx.budgets.integer("trials", 200, 1, 1'000'000));
  const double lo = ctx.tol.number("ratio_low", 1.0 / 8.0, 0.0, 1.0);
  const double hi = ctx.tol.number("ratio_high", 8.0, 1.0, kInf);
  const auto results = run_cells(trials, ctx.jobs(), [&](std::size_t i, int) {
    const int n = ns[i % ns.size()];
    const Eigen::VectorXd a = random_coefficients(n, i, ctx.seed());
    Json rows = Json::array();
    for (double p : ps) {
      const double exact = rademacher_norm_exact(a, p).value;
      const double sur = hitczenko_surrogate(a, p);
      rows.push_back({{"p", p}, {"exact", exact}, {"surrogate", sur}, {"ratio", exact / sur}});
    }
    return Json{{"trial", i}, {"n", n}, {"a", to_json(a)}, {"rows", rows}};
  });
  Table t("hitczenko", {"trial", "n", "p", "exact", "surrogate", "ratio"});
  double rmin = kInf, rmax = 0.0;
  std::map<double, std::pair<double, double>> envelope;
  for (const Json& r : results) {
    for (const Json& row : r["rows"]) {
      const double ratio = row["ratio"];
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
      auto [it, fresh] = envelope.try_emplace(row["p"].get<double>(), ratio, ratio);
      if (!fresh) {
        it->second.first = std::min(it->second.first, ratio);
        it->second.second = std::max(it->second.second, ratio);
      }
      t.add({r["trial"].get<std::int64_t>(), r["n"].get<int>(), row["p"].get<double>(), row["exact"].get<double>(),
             row["surrogate"].get<double>(), ratio});
    }
  }
  rep.cells = Json(results);
  rep.summary["ratio_min"] = rmin;
  rep.summary["ratio_max"] = rmax;
  rep.summary["equivalence_constant"] = std::max(rmax, 1.0 / rmin);
  add_verdict(rep, "hitczenko ratio range", rmin >= lo && rmax <= hi,
              "ratios in [" + fmt(rmin) + ", " + fmt(rmax) + "] within [" + fmt(lo) + ", " + fmt(hi) + "]");
  rep.tables.push_back(std::move(t));

  if (ctx.budgets.flag("decomposition", true)) {
    const int n = static_cast<int>(ctx.budgets.integer("decomposition_n", 6, 1, 12));
    const double p = ctx.budgets.number("decomposition_p", 2.0, 2.0, static_cast<double>(n));
    const double c1_limit = ctx.tol.number("implied_c1", 8.0, 0.0, kInf);
    const auto spec = DistributionSpec::rademacher(n);
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    DualSolveOptions opts = ctx.dual(100'000, true);
    opts.seed = derive_seed(ctx.seed(), "decomposition");
    const auto d = unconditional_decomposition_check(spec, p, s, opts);
    Json dj = to_json(d);
    dj["distribution"] = spec.describe();
    dj["p"] = p;
    // <s,s> / ||<s,eps>||_p is a feasible value, hence a lower bound for lhs.
    dj["brute_force_witness"] = s.squaredNorm() / rademacher_norm_exact(s, p).value;
    rep.summary["decomposition"] = dj;
    add_verdict(rep, "decomposition implied C1", d.implied_c1 <= c1_limit,
                "implied C1 " + fmt(d.implied_c1) + " <= " + fmt(c1_limit));
  }

  Plot plot{"Exact / surrogate moment ratio", "p", "ratio", false, true, {}};
  Series smin{"min over trials", {}, {}, true, false}, smax{"max over trials", {}, {}, true, false};
  for (const auto& [p, mm] : envelope) {
    smin.x.push_back(p);
    smin.y.push_back(mm.first);
    smax.x.push_back(p);
    smax.y.push_back(mm.second);
  }
  plot.series = {smin, smax};
  rep.plots.emplace_back("hitczenko", std::move(plot));
}

// ---- sweep-conjecture ----------------------------------------------------------

void sweep_conjecture(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(
      ctx, {"GaussianIsotropic", "ExponentialProduct", "RademacherProduct", "UniformSphere", "RandomLinearImage"},
      {4, 8, 16}, 64);
  const auto ps = ctx.grid.numbers("p", {2, 4, 8, 16}, 2.0, 64.0);
  const double max_ratio = ctx.tol.number("max_ratio", 5.0, 0.0, kInf);
  const double closed_tol = ctx.tol.number("closed_form_rel", 0.05, 0.0, 1.0);
  const std::int64_t outer = ctx.outer(300);
  const DualSolveOptions base = ctx.dual(20'000, true);
  std::vector<std::pair<std::size_t, double>> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (double p : ps) cells.emplace_back(d, p);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto [d, p] = cells[i];
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const std::uint64_t seed = cell_seed(ctx, i);
    const auto r = zp_moment(specs[d], p, p, outer, opts, seed);
    const auto second = outer_moment(r.values, 2.0, derive_seed(seed, StreamTag::bootstrap, 2), opts.resamples, jobs);
    const int n = specs[d].dim();
    const double scale = std::sqrt((n + p) / p);
    Json j{{"distribution", specs[d].describe()},
           {"family", to_string(specs[d].family())},
           {"n", n},
           {"p", p},
           {"moment_q2", estimate_row(second)},
           {"moment_qp", estimate_row(r.estimate)},
           {"ratio_q2", second.value / scale},
           {"ratio_qp", r.estimate.value / scale},
           {"report", to_json(r)}};
    if (auto cf = closed_form_moment(specs[d], p, 2.0)) j["closed_form_q2"] = *cf;
    if (auto cf = closed_form_moment(specs[d], p, p)) j["closed_form_qp"] = *cf;
    return j;
  });
  Table t("sweep", {"distribution", "n", "p", "moment_q2", "moment_qp", "ratio_q2", "ratio_qp", "closed_form_q2",
                    "closed_form_qp", "method"});
  double worst = 0.0;
  std::map<int, std::map<std::string, Series>> curves;
  for (const Json& r : results) {
    const double r2 = r["ratio_q2"], rp = r["ratio_qp"];
    worst = std::max({worst, r2, rp});
    const auto dist = r["distribution"].get<std::string>();
    auto cf = [&](const char* key) { return r.contains(key) ? Table::Cell(r[key].get<double>()) : Table::Cell(""); };
    t.add({dist, r["n"].get<int>(), r["p"].get<double>(), r["moment_q2"]["value"].get<double>(),
           r["moment_qp"]["value"].get<double>(), r2, rp, cf("closed_form_q2"), cf("closed_form_qp"),
           r["report"]["norm_method"].get<std::string>()});
    for (const auto& [key, est] : {std::pair{"closed_form_q2", "moment_q2"}, std::pair{"closed_form_qp", "moment_qp"}}) {
      if (!r.contains(key)) continue;
      const double oracle = r[key];
      const double value = r[est]["value"];
      const double re = rel_error(value, oracle);
      add_verdict(rep, std::string("closed form ") + dist + " p=" + fmt(r["p"]) + " " + est,
                  std::abs(re) <= closed_tol, fmt(value) + " vs " + fmt(oracle) + ", |rel| <= " + fmt(closed_tol));
    }
    auto& s = curves[r["n"].get<int>()][r["family"].get<std::string>()];
    s.label = r["family"].get<std::string>();
    s.x.push_back(r["p"]);
    s.y.push_back(rp);
    rep.cells.push_back(r);
  }
  rep.summary["max_ratio"] = worst;
  rep.summary["ratio_limit"] = max_ratio;
  add_verdict(rep, "sweep ratio bounded", worst <= max_ratio,
              "max ratio " + fmt(worst) + " <= " + fmt(max_ratio) + " over " + std::to_string(results.size()) + " cells");
  rep.tables.push_back(std::move(t));
  for (auto& [n, by_family] : curves) {
    Plot plot{"Ratio to sqrt((n+p)/p), n=" + std::to_string(n), "p", "(E||X||^p)^{1/p} / sqrt((n+p)/p)", true, false,
              {}};
    for (auto& [f, s] : by_family) plot.series.push_back(s);
    rep.plots.emplace_back("sweep_n" + std::to_string(n), std::move(plot));
  }
}

// ---- unclogcon -----------------------------------------------------------------

std::vector<double> q_grid(const Ctx& ctx, int n, double p) {
  std::vector<double> out;
  const Json qs = ctx.grid.has("q") ? ctx.grid.at("q") : Json::array({2, "p", "sqrt_np"});
  if (!qs.is_array() || qs.empty()) throw ConfigError("config.grid.q must be a non-empty array");
  for (const Json& q : qs) {
    if (q.is_number()) {
      if (!(q.get<double>() >= 1.0)) throw ConfigError("config.grid.q entries must be >= 1");
      out.push_back(q.get<double>());
    } else if (q == "p") {
      out.push_back(p);
    } else if (q == "sqrt_np") {
      out.push_back(std::sqrt(n * p));
    } else {
      throw ConfigError("config.grid.q entries must be numbers, \"p\" or \"sqrt_np\"");
    }
  }
  return out;
}

void unclogcon(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"ExponentialProduct", "GaussianIsotropic", "UniformCube"}, {4, 8}, 64);
  for (const auto& s : specs) {
    if (!s.flags().is_unconditional || !s.flags().is_log_concave) {
      throw ConfigError("unclogcon needs unconditional log-concave laws; got " + s.describe());
    }
  }
  const auto ps = ctx.grid.numbers("p", {2, 4, 8}, 2.0, 64.0);
  const double max_c = ctx.tol.number("max_constant", 5.0, 0.0, kInf);
  const double min_c = ctx.tol.number("min_constant", 0.1, 0.0, kInf);
  const std::int64_t outer = ctx.outer(400);
  const DualSolveOptions base = ctx.dual(50'000, true);
  std::vector<std::pair<std::size_t, double>> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (double p : ps) cells.emplace_back(d, p);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto [d, p] = cells[i];
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const std::uint64_t seed = cell_seed(ctx, i);
    const int n = specs[d].dim();
    const auto r = zp_moment(specs[d], p, 1.0, outer, opts, seed);
    Json rows = Json::array();
    std::uint64_t b = 10;
    for (double q : q_grid(ctx, n, p)) {
      const auto e = outer_moment(r.values, q, derive_seed(seed, StreamTag::bootstrap, b++), opts.resamples, jobs);
      rows.push_back({{"q", q},
                      {"moment", estimate_row(e)},
                      {"q_growth_constant", e.value / (std::sqrt((n + p) / p) + q / p)}});
    }
    Json j{{"distribution", specs[d].describe()}, {"n", n}, {"p", p}, {"mean", estimate_row(r.estimate)},
           {"rows", rows}};
    if (p <= n) {
      const double top_q = std::sqrt(n * p);
      const auto e = outer_moment(r.values, top_q, derive_seed(seed, StreamTag::bootstrap, 99), opts.resamples, jobs);
      j["mean_over_sqrt"] = r.estimate.value / std::sqrt(n / p);
      j["top_moment_over_sqrt"] = e.value / std::sqrt(n / p);
    }
    j["report"] = to_json(r);
    return j;
  });
  Table t("unclogcon", {"distribution", "n", "p", "q", "moment", "q_growth_constant"});
  Table c("unclogcon_sqrt", {"distribution", "n", "p", "mean_over_sqrt", "top_moment_over_sqrt"});
  double worst = 0.0, low = kInf, high = 0.0;
  for (const Json& r : results) {
    const auto dist = r["distribution"].get<std::string>();
    for (const Json& row : r["rows"]) {
      worst = std::max(worst, row["q_growth_constant"].get<double>());
      t.add({dist, r["n"].get<int>(), r["p"].get<double>(), row["q"].get<double>(),
             row["moment"]["value"].get<double>(), row["q_growth_constant"].get<double>()});
    }
    if (r.contains("mean_over_sqrt")) {
      low = std::min(low, r["mean_over_sqrt"].get<double>());
      high = std::max(high, r["top_moment_over_sqrt"].get<double>());
      c.add({dist, r["n"].get<int>(), r["p"].get<double>(), r["mean_over_sqrt"].get<double>(),
             r["top_moment_over_sqrt"].get<double>()});
    }
    rep.cells.push_back(r);
  }
  rep.summary["max_q_growth_constant"] = worst;
  if (std::isfinite(low)) {
    rep.summary["min_mean_over_sqrt"] = low;
    rep.summary["max_top_moment_over_sqrt"] = high;
    add_verdict(rep, "mean over sqrt(n/p) bounded below", low >= min_c, "min " + fmt(low) + " >= " + fmt(min_c));
    add_verdict(rep, "top moment over sqrt(n/p) bounded above", high <= max_c, "max " + fmt(high) + " <= " + fmt(max_c));
  }
  add_verdict(rep, "q-growth constant bounded", worst <= max_c, "max " + fmt(worst) + " <= " + fmt(max_c));
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(std::move(c));
}

// ---- exp-example ---------------------------------------------------------------

void exp_example(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"ExponentialProduct"}, {16}, 256);
  for (const auto& s : specs) {
    if (s.family() != Family::ExponentialProduct) throw ConfigError("exp-example needs ExponentialProduct laws");
  }
  const auto ps = ctx.grid.numbers("p", {4.0}, 2.0, 64.0);
  const auto ts = ctx.grid.numbers("t", {0.5, 1.0, 2.0}, 0.0, 100.0);
  const std::int64_t samples = ctx.budgets.integer("samples", 1'000'000, 1, 1'000'000'000);
  const std::int64_t outer = ctx.outer(200);
  const DualSolveOptions base = ctx.dual(50'000, true);
  std::vector<std::pair<std::size_t, double>> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    for (double p : ps) cells.emplace_back(d, p);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto [d, p] = cells[i];
    const std::uint64_t seed = cell_seed(ctx, i);
    const int n = specs[d].dim();
    const double q = ctx.grid.number("q", std::sqrt(n * p), 1.0, 1e4);
    const auto tails = exponential_witness_lower(specs[d], p, ts, samples, derive_seed(seed, "tails"));
    const auto wm = exponential_witness_moment(specs[d], p, q, samples, derive_seed(seed, "witness"));
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const auto zr = zp_moment(specs[d], p, q, outer, opts, derive_seed(seed, "zp"));
    Json tj = Json::array();
    for (const auto& row : tails) tj.push_back(to_json(row));
    return Json{{"distribution", specs[d].describe()},
                {"n", n},
                {"p", p},
                {"q", q},
                {"tails", tj},
                {"witness_moment",
                 {{"empirical", estimate_row(wm.empirical)}, {"exact", wm.exact}, {"analytic", wm.analytic}}},
                {"zp_moment", to_json(zr)}};
  });
  Table t("exp_tails", {"distribution", "p", "t", "frequency", "ci_low", "ci_high", "analytic", "pass"});
  Table m("exp_moment", {"distribution", "p", "q", "witness_empirical", "witness_exact", "analytic", "zp_moment"});
  std::vector<Series> tail_series;
  for (const Json& r : results) {
    const auto dist = r["distribution"].get<std::string>();
    Series freq{dist + " p=" + fmt(r["p"]) + " frequency", {}, {}, true, false};
    Series ana{dist + " p=" + fmt(r["p"]) + " analytic", {}, {}, false, true};
    for (const Json& row : r["tails"]) {
      const bool pass = row["ci_high"].get<double>() >= row["analytic"].get<double>();
      t.add({dist, r["p"].get<double>(), row["t"].get<double>(), row["frequency"].get<double>(),
             row["ci_low"].get<double>(), row["ci_high"].get<double>(), row["analytic"].get<double>(), pass});
      add_verdict(rep, "exp tail " + dist + " p=" + fmt(r["p"]) + " t=" + fmt(row["t"]), pass,
                  "frequency CI upper " + fmt(row["ci_high"]) + " >= " + fmt(row["analytic"]));
      freq.x.push_back(row["t"]);
      freq.y.push_back(row["frequency"]);
      ana.x.push_back(row["t"]);
      ana.y.push_back(row["analytic"]);
    }
    tail_series.push_back(freq);
    tail_series.push_back(ana);
    const Json& w = r["witness_moment"];
    const double exact = w["exact"], analytic = w["analytic"];
    const double zp = r["zp_moment"]["estimate"]["value"];
    const double zp_high = r["zp_moment"]["estimate"]["ci_high"];
    m.add({dist, r["p"].get<double>(), r["q"].get<double>(), w["empirical"]["value"].get<double>(), exact, analytic,
           zp});
    add_verdict(rep, "exp witness moment " + dist + " p=" + fmt(r["p"]),
                exact >= analytic * (1.0 - 1e-12),
                "(2/p)||X_1||_q = " + fmt(exact) + " >= " + fmt(analytic));
    add_verdict(rep, "exp zp moment above witness " + dist + " p=" + fmt(r["p"]), zp_high >= analytic,
                "zp moment CI upper " + fmt(zp_high) + " >= " + fmt(analytic));
    rep.cells.push_back(r);
  }
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(std::move(m));
  rep.plots.emplace_back("exp_tails", Plot{"Witness tail frequencies", "t", "P(witness >= t sqrt(n/p))", false, true,
                                           std::move(tail_series)});
}

// ---- entropy-zp ----------------------------------------------------------------

NetOptions net_options(const Ctx& ctx) {
  NetOptions o;
  o.boundary_candidates = ctx.budgets.integer("boundary", o.boundary_candidates, 1, 10'000'000);
  o.interior_candidates = ctx.budgets.integer("interior", o.interior_candidates, 0, 10'000'000);
  if (o.boundary_candidates + o.interior_candidates < 1000) throw ConfigError("nets need at least 1000 candidates");
  o.refine_limit = ctx.budgets.integer("refine_limit", o.refine_limit, 0, 4096);
  o.jobs = ctx.jobs();
  return o;
}

void entropy_zp(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"GaussianIsotropic"}, {8}, 32);
  const auto ps = ctx.grid.numbers("p", {4.0}, 2.0, 64.0);
  const auto fractions = ctx.grid.numbers("eps_fraction", {0.5, 0.75, 1.0, 1.25}, 1e-3, 100.0);
  const std::int64_t outer = ctx.outer(500);
  const std::int64_t body_saa = ctx.budgets.integer("body_saa", 20'000, 100, 10'000'000);
  const DualSolveOptions base = ctx.dual(50'000, true);
  const NetOptions nopts = net_options(ctx);
  std::optional<double> lambda;
  if (ctx.root.has("lambda")) lambda = ctx.root.number("lambda", 1.0, 0.0, kInf);

  std::vector<std::pair<std::size_t, double>> cells;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    if (!specs[d].flags().is_isotropic) throw ConfigError("entropy-zp needs isotropic laws");
    if (!lambda && !default_growth_constant(specs[d])) {
      throw ConfigError("no default growth constant for " + specs[d].describe() + "; set config.lambda");
    }
    for (double p : ps) cells.emplace_back(d, p);
  }
  const auto results = run_cells(cells.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto [d, p] = cells[i];
    const auto& spec = specs[d];
    const std::uint64_t seed = cell_seed(ctx, i);
    DualSolveOptions opts = base;
    opts.jobs = jobs;
    const auto measured = zp_moment(spec, p, 2.0, outer, opts, derive_seed(seed, "measured"));
    const BodyOracle body = BodyOracle::mp_ball(spec, p, body_saa, derive_seed(seed, "body"));
    NetOptions no = nopts;
    no.jobs = jobs;
    const double lam = lambda ? *lambda : *default_growth_constant(spec);
    Json rows = Json::array();
    for (double f : fractions) {
      const double eps = f * body.circumradius();
      const NetResult net = greedy_net(body, eps, derive_seed(seed, "net"), no);
      const double bound = entropy_to_zp_bound(spec.dim(), p, eps, net.count, lam);
      rows.push_back({{"eps_fraction", f}, {"eps", eps}, {"bound", bound}, {"net", to_json(net)}});
    }
    return Json{{"distribution", spec.describe()}, {"n", spec.dim()},  {"p", p},
                {"lambda", lam},                   {"rows", rows},      {"measured", to_json(measured)},
                {"circumradius", body.circumradius()}};
  });
  Table t("entropy_zp", {"distribution", "p", "eps", "net_count", "separated_2eps", "bound", "measured", "pass"});
  for (const Json& r : results) {
    const auto dist = r["distribution"].get<std::string>();
    const double measured = r["measured"]["estimate"]["value"];
    Series bound_s{"bound", {}, {}, false, false};
    Series meas_s{"measured (E||X||^2)^{1/2}", {}, {}, false, true};
    for (const Json& row : r["rows"]) {
      const double bound = row["bound"];
      const bool pass = bound >= measured;
      t.add({dist, r["p"].get<double>(), row["eps"].get<double>(), row["net"]["count"].get<std::int64_t>(),
             row["net"]["separated_2eps"].get<std::int64_t>(), bound, measured, pass});
      add_verdict(rep, "entropy bound " + dist + " p=" + fmt(r["p"]) + " eps=" + fmt(row["eps"]), pass,
                  "bound " + fmt(bound) + " >= measured " + fmt(measured));
      bound_s.x.push_back(row["eps"]);
      bound_s.y.push_back(bound);
      meas_s.x.push_back(row["eps"]);
      meas_s.y.push_back(measured);
    }
    rep.plots.emplace_back("entropy_" + std::to_string(rep.plots.size()),
                           Plot{"Entropy bound, " + dist + " p=" + fmt(r["p"]), "eps", "value", false, false,
                                {bound_s, meas_s}});
    rep.cells.push_back(r);
  }
  rep.tables.push_back(std::move(t));
}

// ---- prop36 --------------------------------------------------------------------

void prop36(const Ctx& ctx, ExperimentReport& rep) {
  Json cases = ctx.root.has("cases") ? ctx.root.at("cases")
                                     : Json::array({Json{{"distribution", {{"family", "GaussianIsotropic"}, {"n", 6}}},
                                                         {"p", 4},
                                                         {"cx", 2},
                                                         {"expect", "pass"}},
                                                    Json{{"distribution", {{"family", "SparseIsotropic"}, {"n", 16}}},
                                                         {"p", 4},
                                                         {"cx", 1},
                                                         {"expect", "pass"}},
                                                    Json{{"distribution", {{"family", "SparseIsotropic"}, {"n", 16}}},
                                                         {"p", 4},
                                                         {"cx", 0.1},
                                                         {"expect", "refuted"}}});
  if (!cases.is_array() || cases.empty()) throw ConfigError("config.cases must be a non-empty array");
  struct Case {
    DistributionSpec spec;
    double p, cx;
    std::string expect;
  };
  std::vector<Case> parsed;
  for (const Json& c : cases) {
    const Reader r(c, "config.cases[]");
    if (!r.has("distribution")) throw ConfigError("each prop36 case needs a distribution");
    const std::string expect = r.text("expect", "record");
    if (expect != "pass" && expect != "refuted" && expect != "record") {
      throw ConfigError("prop36 expect must be pass, refuted or record");
    }
    parsed.push_back({spec_from_json(r.at("distribution")), r.number("p", 4.0, 2.0, 64.0),
                      r.number("cx", 1.0, 1e-6, 1e6), expect});
  }
  const NetOptions nopts = net_options(ctx);
  const std::int64_t body_saa = ctx.budgets.integer("body_saa", 20'000, 100, 10'000'000);
  const auto results = run_cells(parsed.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const Case& c = parsed[i];
    NetOptions no = nopts;
    no.jobs = jobs;
    const auto r = prop36_check(c.spec, c.p, c.cx, cell_seed(ctx, i), no, body_saa);
    return Json{{"distribution", c.spec.describe()}, {"p", c.p}, {"cx", c.cx}, {"expect", c.expect},
                {"result", to_json(r)}};
  });
  Table t("prop36", {"distribution", "p", "cx", "radius", "net_count", "certified_lower", "bound", "pass", "refuted",
                     "expect"});
  for (const Json& r : results) {
    const Json& res = r["result"];
    const auto dist = r["distribution"].get<std::string>();
    const auto expect = r["expect"].get<std::string>();
    t.add({dist, r["p"].get<double>(), r["cx"].get<double>(), res["radius"].get<double>(),
           res["net_count"].get<std::int64_t>(), res["certified_lower"].get<std::int64_t>(), res["bound"].get<double>(),
           res["pass"].get<bool>(), res["refuted"].get<bool>(), expect});
    const std::string detail = "net count " + fmt(res["net_count"]) + ", certified lower " +
                               fmt(res["certified_lower"]) + ", e^p = " + fmt(res["bound"]);
    const std::string name = "prop36 " + dist + " p=" + fmt(r["p"]) + " cx=" + fmt(r["cx"]);
    if (expect == "pass") add_verdict(rep, name + " passes", res["pass"].get<bool>(), detail);
    if (expect == "refuted") add_verdict(rep, name + " refuted", res["refuted"].get<bool>(), detail);
    rep.cells.push_back(r);
  }
  rep.tables.push_back(std::move(t));
}

// ---- sudakov -------------------------------------------------------------------

SudakovBudgets sudakov_budgets(const Ctx& ctx, std::int64_t samples_default) {
  SudakovBudgets b;
  b.samples = ctx.budgets.integer("samples", samples_default, 1, 100'000'000);
  b.net = net_options(ctx);
  b.dual = ctx.dual(20'000, true);
  b.body_saa = ctx.budgets.integer("body_saa", b.body_saa, 100, 10'000'000);
  b.jobs = ctx.jobs();
  return b;
}

Series profile_series(const std::string& label, const Json& profile) {
  Series s{label, {}, {}, false, false};
  for (const Json& e : profile) {
    s.x.push_back(e["eps"]);
    s.y.push_back(e["contribution"]);
  }
  return s;
}

void sudakov_sparse(const Ctx& ctx, ExperimentReport& rep) {
  const auto ns = ctx.grid.integers("n", {16, 64, 256}, 1, 1 << 16);
  const double min_scaled = ctx.tol.number("min_cx_over_sqrt_n", 0.2, 0.0, kInf);
  const double min_growth = ctx.tol.number("min_growth", 1.5, 0.0, kInf);
  const SudakovBudgets base = sudakov_budgets(ctx, 10'000);
  const auto results = run_cells(ns.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const int n = ns[i];
    const auto spec = DistributionSpec::sparse(n);
    const IndexSet T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
    SudakovBudgets b = base;
    b.jobs = jobs;
    const std::uint64_t seed = cell_seed(ctx, i);
    const auto rep_i = minoration_constant_lower(spec, T, {}, b, seed);
    // Every realization is checked, not only the average.
    const RowMatrix rows = sample_rows(spec, seed, 0, b.samples, jobs);
    std::int64_t off = 0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      if (sup_of_realization(T, rows.row(r).transpose()) != 1.0) ++off;
    }
    return Json{{"n", n},
                {"index_set", T.describe()},
                {"realizations", b.samples},
                {"realizations_not_one", off},
                {"cx_over_sqrt_n", rep_i.cx_lower / std::sqrt(static_cast<double>(n))},
                {"minoration", to_json(rep_i)}};
  });
  Table t("sudakov_sparse", {"n", "sup_estimate", "sup_ci_low", "sup_ci_high", "realizations_not_one", "cx_lower",
                             "cx_over_sqrt_n", "best_eps"});
  Table prof("sudakov_sparse_profile", {"n", "eps", "log_n_lower", "source", "contribution"});
  Plot plot{"Sparse example entropy profile", "eps", "eps sqrt(log N) / E sup", true, false, {}};
  std::vector<double> cx;
  for (const Json& r : results) {
    const Json& m = r["minoration"];
    const auto sup = estimate_from(m["sup_estimate"]);
    const double scaled = r["cx_over_sqrt_n"];
    cx.push_back(m["cx_lower"]);
    t.add({r["n"].get<int>(), sup.value, sup.ci_low, sup.ci_high, r["realizations_not_one"].get<std::int64_t>(),
           m["cx_lower"].get<double>(), scaled, m["best_eps"].get<double>()});
    for (const Json& e : m["entropy_profile"]) {
      prof.add({r["n"].get<int>(), e["eps"].get<double>(), e["log_n_lower"].get<double>(),
                e["source"].get<std::string>(), e["contribution"].get<double>()});
    }
    const std::string n = fmt(r["n"]);
    add_verdict(rep, "sparse sup exactly one n=" + n,
                r["realizations_not_one"].get<std::int64_t>() == 0 && sup.value == 1.0 && sup.ci_low == 1.0 &&
                    sup.ci_high == 1.0,
                fmt(r["realizations_not_one"]) + " realizations differ from 1; estimate " + fmt(sup.value));
    add_verdict(rep, "sparse cx/sqrt(n) n=" + n, scaled >= min_scaled, fmt(scaled) + " >= " + fmt(min_scaled));
    plot.series.push_back(profile_series("n=" + n, m["entropy_profile"]));
    rep.cells.push_back(r);
  }
  for (std::size_t i = 0; i + 1 < cx.size(); ++i) {
    const double g = cx[i + 1] / cx[i];
    rep.summary["growth_" + std::to_string(ns[i + 1]) + "_" + std::to_string(ns[i])] = g;
    add_verdict(rep, "sparse growth n=" + std::to_string(ns[i + 1]) + "/" + std::to_string(ns[i]), g >= min_growth,
                fmt(g) + " >= " + fmt(min_growth));
  }
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(std::move(prof));
  rep.plots.emplace_back("sudakov_sparse", std::move(plot));
}

void sudakov_uncond(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs = distributions(ctx, {"RademacherProduct", "ExponentialProduct"}, {4, 16, 64}, 4096);
  for (const auto& s : specs) {
    if (!s.flags().is_unconditional) throw ConfigError("sudakov-uncond needs unconditional laws");
  }
  const std::string kind = ctx.root.text("index_set", "cube");
  if (kind != "cube" && kind != "coordinate") throw ConfigError("index_set must be cube or coordinate");
  const double max_ratio = ctx.tol.number("max_ratio", 1.0, 0.0, kInf);
  const SudakovBudgets base = sudakov_budgets(ctx, 20'000);
  const auto results = run_cells(specs.size(), ctx.jobs(), [&](std::size_t i, int jobs) {
    const auto& spec = specs[i];
    const int n = spec.dim();
    IndexSet T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
    if (kind == "coordinate") {
      RowMatrix pts = RowMatrix::Zero(2, n);
      pts(0, 0) = 1.0;
      pts(1, 0) = -1.0;
      T = IndexSet::finite(pts);
    }
    SudakovBudgets b = base;
    b.jobs = jobs;
    const auto r = unconditional_minoration_ratio(spec, T, b, cell_seed(ctx, i));
    return Json{{"distribution", spec.describe()},  {"family", to_string(spec.family())},
                {"n", n},                           {"index_set", T.describe()},
                {"min_first_moment", r.min_first_moment}, {"ratio", r.ratio},
                {"minoration", to_json(r.report)}};
  });
  Table t("sudakov_uncond",
          {"distribution", "n", "index_set", "sup_estimate", "cx_lower", "min_first_moment", "ratio"});
  std::map<std::string, Series> curves;
  double worst = 0.0;
  for (const Json& r : results) {
    const Json& m = r["minoration"];
    worst = std::max(worst, r["ratio"].get<double>());
    t.add({r["distribution"].get<std::string>(), r["n"].get<int>(), r["index_set"].get<std::string>(),
           m["sup_estimate"]["value"].get<double>(), m["cx_lower"].get<double>(),
           r["min_first_moment"].get<double>(), r["ratio"].get<double>()});
    auto& s = curves[r["family"].get<std::string>()];
    s.label = r["family"].get<std::string>();
    s.markers = false;
    s.x.push_back(r["n"]);
    s.y.push_back(r["ratio"]);
    rep.cells.push_back(r);
  }
  rep.summary["max_ratio"] = worst;
  add_verdict(rep, "unconditional ratio bounded", worst <= max_ratio, "max " + fmt(worst) + " <= " + fmt(max_ratio));
  rep.tables.push_back(std::move(t));
  Plot plot{"Normalized minoration ratio", "n", "cx min E|X_i| / sqrt(log(n+1))", true, false, {}};
  for (auto& [f, s] : curves) plot.series.push_back(s);
  rep.plots.emplace_back("sudakov_uncond", std::move(plot));
}

// ---- orderstat -----------------------------------------------------------------

void orderstat(const Ctx& ctx, ExperimentReport& rep) {
  const auto specs =
      distributions(ctx, {"GaussianIsotropic", "ExponentialProduct", "UniformCube"}, {4, 16, 64}, 4096);
  for (const auto& s : specs) {
    if (!s.flags().is_isotropic || !s.flags().is_log_concave) {
      throw ConfigError("orderstat needs isotropic log-concave laws; got " + s.describe());
    }
  }
  const std::int64_t samples = ctx.budgets.integer("samples", 100'000, 10, 100'000'000);
  const int resamples = static_cast<int>(ctx.budgets.integer("resamples", 400, 0, 100'000));
  const double min_value = ctx.tol.number("min_value", 0.25, 0.0, kInf);
  const auto results = run_cells(specs.size(), ctx.jobs(), [&](std::size_t i, int) {
    const int n = specs[i].dim();
    const int rank = (n + 1) / 2;
    const auto e = order_stat_mean(specs[i], rank, samples, cell_seed(ctx, i), resamples);
    return Json{{"distribution", specs[i].describe()}, {"family", to_string(specs[i].family())}, {"n", n},
                {"rank", rank}, {"estimate", to_json(e)}};
  });
  Table t("orderstat", {"distribution", "n", "rank", "estimate", "ci_low", "ci_high"});
  std::map<std::string, Series> curves;
  double lowest = kInf;
  for (const Json& r : results) {
    const auto e = estimate_from(r["estimate"]);
    lowest = std::min(lowest, e.ci_low);
    t.add({r["distribution"].get<std::string>(), r["n"].get<int>(), r["rank"].get<int>(), e.value, e.ci_low,
           e.ci_high});
    auto& s = curves[r["family"].get<std::string>()];
    s.label = r["family"].get<std::string>();
    s.x.push_back(r["n"]);
    s.y.push_back(e.value);
    rep.cells.push_back(r);
  }
  rep.summary["min_ci_low"] = lowest;
  add_verdict(rep, "median order statistic bounded below", lowest >= min_value,
              "min CI lower " + fmt(lowest) + " >= " + fmt(min_value));
  rep.tables.push_back(std::move(t));
  Plot plot{"Mean of the ceil(n/2)-th largest |X_i|", "n", "E X*", true, false, {}};
  for (auto& [f, s] : curves) plot.series.push_back(s);
  rep.plots.emplace_back("orderstat", std::move(plot));
}

using Runner = void (*)(const Ctx&, ExperimentReport&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"verify-rotinv", verify_rotinv},   {"verify-z2", verify_z2},       {"remark-largep", remark_largep},
      {"verify-prop21", verify_prop21},   {"c2k-table", c2k_table},       {"hitczenko", hitczenko},
      {"sweep-conjecture", sweep_conjecture}, {"unclogcon", unclogcon},   {"exp-example", exp_example},
      {"entropy-zp", entropy_zp},         {"prop36", prop36},             {"sudakov-sparse", sudakov_sparse},
      {"sudakov-uncond", sudakov_uncond}, {"orderstat", orderstat}};
  return table;
}

}  // namespace

ExperimentConfig make_config(const Json& doc, const std::string& experiment, std::optional<std::uint64_t> seed,
                             int jobs) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!runners().contains(experiment)) throw ConfigError("unknown experiment '" + experiment + "'");
  if (doc.contains("experiment")) {
    if (!doc.at("experiment").is_string() || doc.at("experiment").get<std::string>() != experiment) {
      throw ConfigError("config is for experiment " + doc.at("experiment").dump() + ", not '" + experiment + "'");
    }
  }
  ExperimentConfig c;
  c.experiment = experiment;
  c.jobs = jobs;
  c.raw = doc;
  if (seed) {
    c.seed = *seed;
  } else {
    if (!doc.contains("seed")) throw ConfigError("config.seed is required (or pass --seed)");
    if (!doc.at("seed").is_number_unsigned()) throw ConfigError("config.seed must be a non-negative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  c.raw["experiment"] = experiment;
  c.raw["seed"] = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::string& experiment,
                             std::optional<std::uint64_t> seed, int jobs) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  return make_config(doc, experiment, seed, jobs);
}

ExperimentReport run(const ExperimentConfig& config) {
  const auto it = runners().find(config.experiment);
  if (it == runners().end()) throw ConfigError("unknown experiment '" + config.experiment + "'");
  ExperimentReport rep;
  rep.experiment = config.experiment;
  rep.seed = config.seed;
  rep.config = config.raw;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Ctx ctx(config);
    it->second(ctx, rep);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const ResourceGuard& e) {
    throw ConfigError(e.what());
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  Json timing{{"experiment", report.experiment}, {"wall_seconds", report.wall_seconds}};
  write_text(dir / "timing.json", timing.dump(2) + "\n");
  for (const auto& t : report.tables) write_text(dir / "tables" / (t.name() + ".csv"), t.to_csv());
}

void emit_plots(const ExperimentReport& report, const std::filesystem::path& dir) {
  for (const auto& [name, plot] : report.plots) write_text(dir / "plots" / (name + ".svg"), render_svg(plot));
}

}  // namespace centroidkit
