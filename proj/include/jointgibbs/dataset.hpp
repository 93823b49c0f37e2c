#pragma once

// Tabular data: CSV ingestion, variable typing, missing-data patterns,
// scaling statistics and contrast coding.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jointgibbs/error.hpp"

namespace jointgibbs {

/// A data column. Numeric columns use `numbers`; categorical columns use
/// `codes` (0-based index into `categories`). Missing cells are flagged in
/// `missing` and hold NaN / -1.
struct Column {
  std::string name;
  bool categorical = false;
  bool ordered = false;
  std::vector<double> numbers;
  std::vector<int> codes;
  std::vector<std::string> categories;
  std::vector<bool> missing;

  std::size_t size() const { return missing.size(); }
  std::size_t n_missing() const;
  /// Numeric value of a cell; categorical cells yield their code.
  double value(std::size_t row) const { return categorical ? codes[row] : numbers[row]; }
  std::string cell_text(std::size_t row) const;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const Column& column(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t index_of(const std::string& name) const;

  void add_column(Column c);
  void replace_column(Column c);

 private:
  std::vector<Column> columns_;
  std::map<std::string, std::size_t> index_;
  std::size_t n_rows_ = 0;
};

/// Parses CSV text (RFC 4180 quoting). A cell equal to `na_token` or empty is
/// missing. Columns whose non-missing cells all parse as numbers are numeric.
Dataset parse_csv(const std::string& text, const std::string& na_token = "NA");
Dataset read_csv(const std::string& path, const std::string& na_token = "NA");
std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string csv_escape(const std::string& s);

enum class VType { Continuous, Binary, Unordered, Ordered };
const char* vtype_name(VType t);

struct TypeOverride {
  std::optional<VType> vtype;
  std::vector<std::string> levels;  // explicit category order (categoricals)
  std::optional<std::string> level;  // "lvlone" or the grouping variable
};

struct VariableMeta {
  std::string name;
  VType vtype = VType::Continuous;
  std::size_t n_categories = 0;
  std::vector<std::string> categories;
  std::string level = "lvlone";
  std::size_t n_missing = 0;  // counted per unit of `level`
  std::string ref_cat;
  double scale_mean = 0.0;
  double scale_sd = 1.0;
};

/// Row clusters defined by a grouping column, in first-appearance order.
struct Grouping {
  std::string variable;
  std::vector<std::size_t> row_group;           // group index per row
  std::vector<std::vector<std::size_t>> rows;   // rows per group
  std::vector<std::string> labels;

  std::size_t n_groups() const { return rows.size(); }
};

Grouping make_grouping(const Dataset& ds, const std::string& variable);

/// True when every group has a single observed value and a constant
/// missingness status.
bool is_group_constant(const Column& col, const Grouping& g);

/// Converts numeric columns with exactly two distinct observed values to
/// two-category factors and applies type overrides. Returns the new dataset.
Dataset apply_types(const Dataset& ds, const std::map<std::string, TypeOverride>& overrides);

std::vector<VariableMeta> infer_variable_meta(const Dataset& ds, const Grouping* grouping,
                                              const std::map<std::string, TypeOverride>& overrides = {});

struct MdPattern {
  std::vector<std::string> columns;         // ordered by missing count ascending
  std::vector<std::vector<int>> patterns;   // 1 = observed, 0 = missing
  std::vector<std::size_t> counts;
  std::vector<std::size_t> missing_per_column;
};

MdPattern md_pattern(const Dataset& ds);
std::string md_pattern_csv(const MdPattern& p);
void write_md_pattern_csv(const MdPattern& p, const std::string& path);

struct ScalingStats {
  double mean = 0.0;
  double sd = 1.0;
};

/// Mean and sample sd over the non-NaN values.
ScalingStats scaling_stats(const std::vector<double>& values);
std::vector<double> apply_scaling(const std::vector<double>& values, const ScalingStats& s);
std::vector<double> unapply_scaling(const std::vector<double>& values, const ScalingStats& s);

/// spec: "first", "last", "largest", a category label, or a 1-based index.
std::string resolve_refcat(const std::string& spec, const Column& col);

enum class Coding { Dummy, Effect };
Coding parse_coding(const std::string& s);

struct ContrastColumns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // one vector per design column (NaN if missing)
  std::vector<int> category;                // category represented by each column
};

ContrastColumns encode_contrasts(const Column& col, const std::string& ref_cat, Coding coding);

/// Contrast value of design column for `category` given the observed code.
inline double contrast_value(int code, int category, int ref, Coding coding) {
  if (code == category) return 1.0;
  if (coding == Coding::Effect && code == ref) return -1.0;
  return 0.0;
}

std::string format_double(double v);

}  // namespace jointgibbs
