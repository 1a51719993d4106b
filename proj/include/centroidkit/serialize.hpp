#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "centroidkit/cover.hpp"
#include "centroidkit/dists.hpp"
#include "centroidkit/dual.hpp"
#include "centroidkit/estimate.hpp"
#include "centroidkit/sudakov.hpp"

namespace centroidkit {

/// Insertion-ordered JSON so that reports serialize byte-identically.
using Json = nlohmann::ordered_json;

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

Json to_json(const Eigen::VectorXd& v);
Json to_json(const DistributionSpec& spec);
/// Inverse of to_json(DistributionSpec); throws ConfigError on bad input.
DistributionSpec spec_from_json(const Json& j);

Json to_json(const NormEstimate& e);
Json to_json(const ZpMomentReport& r, bool include_values = false);
Json to_json(const NetResult& net, bool include_centers = false);
Json to_json(const MinorationReport& r);
Json to_json(const Prop36Result& r);
Json to_json(const DecompositionCheck& d);
Json to_json(const TailRow& row);

/// A flat table destined for tables/<name>.csv.
class Table {
 public:
  struct Cell {
    std::string text;
    Cell(double x) : text(format_number(x)) {}
    Cell(int x) : text(std::to_string(x)) {}
    Cell(std::int64_t x) : text(std::to_string(x)) {}
    Cell(std::uint64_t x) : text(std::to_string(x)) {}
    Cell(bool x) : text(x ? "true" : "false") {}
    Cell(std::string s) : text(std::move(s)) {}
    Cell(const char* s) : text(s) {}
  };

  Table(std::string name, std::vector<std::string> columns);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

  void add(std::vector<Cell> cells);
  /// Column values as numbers (NaN where a cell does not parse).
  std::vector<double> numeric_column(const std::string& column) const;
  std::string to_csv() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace centroidkit
