#include "centroidkit/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "centroidkit/error.hpp"

namespace centroidkit {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const DistributionSpec& spec) {
  Json j;
  j["family"] = to_string(spec.family());
  j["n"] = spec.dim();
  switch (spec.family()) {
    case Family::UniformSphere: {
      const RadialLaw& r = spec.radial();
      Json rj;
      rj["kind"] = to_string(r.kind);
      if (r.kind == RadialLaw::Kind::Constant) rj["radius"] = r.radius;
      if (r.kind == RadialLaw::Kind::GeneralizedGamma) {
        rj["shape"] = r.shape;
        rj["power"] = r.power;
        rj["scale"] = r.scale;
      }
      j["radial"] = rj;
      break;
    }
    case Family::UnconditionalProduct: {
      Json ms = Json::array();
      for (const Marginal& m : spec.marginals()) {
        Json mj;
        mj["kind"] = to_string(m.kind);
        mj["scale"] = m.scale;
        if (m.kind == Marginal::Kind::LaplacePower) mj["power"] = m.power;
        ms.push_back(mj);
      }
      j["marginals"] = ms;
      break;
    }
    case Family::LinearImage: {
      Json rows = Json::array();
      for (Eigen::Index i = 0; i < spec.matrix().rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(spec.matrix().row(i))));
      j["matrix"] = rows;
      j["base"] = to_json(spec.base());
      break;
    }
    default: break;
  }
  return j;
}

namespace {

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("distribution is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("distribution field '") + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

Marginal marginal_from_json(const Json& j) {
  const auto kind = field<std::string>(j, "kind");
  const double scale = field_or(j, "scale", 1.0);
  if (kind == "two_point") return Marginal::two_point(scale);
  if (kind == "uniform") return Marginal::uniform(scale);
  if (kind == "exponential") return Marginal::exponential(scale);
  if (kind == "gaussian") return Marginal::gaussian(scale);
  if (kind == "laplace_power") return Marginal::laplace_power(scale, field<double>(j, "power"));
  throw ConfigError("unknown marginal kind '" + kind + "'");
}

RadialLaw radial_from_json(const Json& j) {
  const auto kind = field<std::string>(j, "kind");
  if (kind == "constant") return RadialLaw::constant(field_or(j, "radius", 1.0));
  if (kind == "chi") return RadialLaw::chi();
  if (kind == "generalized_gamma") {
    return RadialLaw::generalized_gamma(field<double>(j, "shape"), field<double>(j, "power"), field_or(j, "scale", 1.0));
  }
  throw ConfigError("unknown radial law '" + kind + "'");
}

}  // namespace

DistributionSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("distribution must be an object");
  Family family;
  try {
    family = family_from_string(field<std::string>(j, "family"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  try {
    switch (family) {
      case Family::GaussianIsotropic: return DistributionSpec::gaussian(field<int>(j, "n"));
      case Family::ExponentialProduct: return DistributionSpec::exponential(field<int>(j, "n"));
      case Family::RademacherProduct: return DistributionSpec::rademacher(field<int>(j, "n"));
      case Family::UniformCube: return DistributionSpec::uniform_cube(field<int>(j, "n"));
      case Family::SparseIsotropic: return DistributionSpec::sparse(field<int>(j, "n"));
      case Family::UniformSphere:
        return DistributionSpec::uniform_sphere(
            field<int>(j, "n"), j.contains("radial") ? radial_from_json(j.at("radial")) : RadialLaw::constant());
      case Family::UnconditionalProduct: {
        std::vector<Marginal> ms;
        const Json& arr = j.at("marginals");
        if (!arr.is_array()) throw ConfigError("'marginals' must be an array");
        for (const Json& m : arr) ms.push_back(marginal_from_json(m));
        if (j.contains("n") && field<int>(j, "n") != static_cast<int>(ms.size())) {
          throw ConfigError("'n' disagrees with the number of marginals");
        }
        return DistributionSpec::unconditional_product(std::move(ms));
      }
      case Family::LinearImage: {
        const auto rows = field<std::vector<std::vector<double>>>(j, "matrix");
        if (rows.empty()) throw ConfigError("'matrix' is empty");
        Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows[0].size()) throw ConfigError("'matrix' rows differ in length");
          for (std::size_t k = 0; k < rows[i].size(); ++k) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        if (!j.contains("base")) throw ConfigError("distribution is missing 'base'");
        return DistributionSpec::linear_image(A, spec_from_json(j.at("base")));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed distribution: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unsupported family");
}

Json to_json(const NormEstimate& e) {
  Json j;
  j["value"] = e.value;
  j["ci_low"] = e.ci_low;
  j["ci_high"] = e.ci_high;
  j["std_error"] = e.std_error;
  j["method"] = to_string(e.method);
  if (e.lower_bound_only) j["lower_bound_only"] = true;
  if (e.lower_witness) j["lower_witness"] = {{"value", e.lower_witness->value}, {"point", to_json(e.lower_witness->point)}};
  if (e.upper_bound) j["upper_bound"] = {{"value", e.upper_bound->value}, {"provenance", e.upper_bound->provenance}};
  return j;
}

Json to_json(const ZpMomentReport& r, bool include_values) {
  Json j;
  j["distribution"] = r.distribution;
  j["n"] = r.n;
  j["p"] = r.p;
  j["q"] = r.q;
  j["outer_samples"] = r.outer_samples;
  j["saa_samples"] = r.saa_samples;
  j["norm_method"] = to_string(r.norm_method);
  j["seed"] = r.seed;
  j["warm_start"] = r.warm_start;
  j["estimate"] = to_json(r.estimate);
  j["witness_estimate"] = to_json(r.witness_estimate);
  j["ratio_to_conjecture"] = r.ratio_to_conjecture;
  j["capped_fraction"] = r.capped_fraction;
  j["mean_iterations"] = r.mean_iterations;
  j["max_iterations_used"] = r.max_iterations_used;
  if (r.mean_certificate_gap) j["mean_certificate_gap"] = *r.mean_certificate_gap;
  if (include_values) j["values"] = r.values;
  return j;
}

Json to_json(const NetResult& net, bool include_centers) {
  Json j;
  j["body"] = net.body;
  j["eps"] = net.eps;
  j["kind"] = to_string(net.kind);
  j["count"] = net.count;
  j["packing_count"] = net.packing_count;
  j["separated_2eps"] = net.separated_2eps;
  j["achieved_radius"] = net.achieved_radius;
  j["refined"] = net.refined;
  j["boundary_candidates"] = net.boundary_candidates;
  j["interior_candidates"] = net.interior_candidates;
  j["seed"] = net.seed;
  if (include_centers) {
    Json cs = Json::array();
    for (const auto& c : net.centers) cs.push_back(to_json(c));
    j["centers"] = cs;
  }
  return j;
}

Json to_json(const MinorationReport& r) {
  Json j;
  j["sup_estimate"] = to_json(r.sup_estimate);
  j["cx_lower"] = r.cx_lower;
  j["best_eps"] = r.best_eps;
  Json prof = Json::array();
  for (const auto& e : r.profile) {
    prof.push_back({{"eps", e.eps}, {"log_n_lower", e.log_n_lower}, {"source", e.source}, {"contribution", e.contribution}});
  }
  j["entropy_profile"] = prof;
  return j;
}

Json to_json(const Prop36Result& r) {
  Json j;
  j["radius"] = r.radius;
  j["net_count"] = r.net_count;
  j["certified_lower"] = r.certified_lower;
  j["bound"] = r.bound;
  j["pass"] = r.pass;
  j["refuted"] = r.refuted;
  j["net"] = to_json(r.net);
  return j;
}

Json to_json(const DecompositionCheck& d) {
  Json j;
  j["lhs"] = d.lhs;
  j["term_sparse"] = d.term_sparse;
  j["term_euclid"] = d.term_euclid;
  j["implied_c1"] = d.implied_c1;
  j["best_support"] = d.best_support;
  j["method"] = to_string(d.method);
  return j;
}

Json to_json(const TailRow& row) {
  Json j;
  j["t"] = row.t;
  j["frequency"] = row.frequency;
  j["ci_low"] = row.ci_low;
  j["ci_high"] = row.ci_high;
  j["analytic"] = row.analytic;
  return j;
}

Table::Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {
  if (columns_.empty()) throw InvalidArgument("a table needs at least one column");
}

void Table::add(std::vector<Cell> cells) {
  if (cells.size() != columns_.size()) throw InvalidArgument("row width differs from the header in table " + name_);
  std::vector<std::string> row;
  row.reserve(cells.size());
  for (auto& c : cells) row.push_back(std::move(c.text));
  rows_.push_back(std::move(row));
}

std::vector<double> Table::numeric_column(const std::string& column) const {
  std::size_t idx = columns_.size();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == column) idx = i;
  }
  if (idx == columns_.size()) throw InvalidArgument("no column '" + column + "' in table " + name_);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    const std::string& s = row[idx];
    double x = std::nan("");
    std::from_chars(s.data(), s.data() + s.size(), x);
    out.push_back(x);
  }
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + csv_escape(columns_[i]);
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i]);
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

}  // namespace centroidkit
