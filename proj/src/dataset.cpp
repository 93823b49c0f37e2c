#include "jointgibbs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace jointgibbs {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::size_t Column::n_missing() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true));
}

std::string Column::cell_text(std::size_t row) const {
  if (missing[row]) return "NA";
  return categorical ? categories[codes[row]] : format_double(numbers[row]);
}

Dataset::Dataset(std::vector<Column> columns) {
  for (auto& c : columns) add_column(std::move(c));
}

const Column& Dataset::column(const std::string& name) const { return columns_[index_of(name)]; }

std::size_t Dataset::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown variable '" + name + "'");
  return it->second;
}

void Dataset::add_column(Column c) {
  if (index_.count(c.name)) throw DataError("duplicate column name '" + c.name + "'");
  if (!columns_.empty() && c.size() != n_rows_)
    throw DataError("column '" + c.name + "' has " + std::to_string(c.size()) + " rows, expected " +
                    std::to_string(n_rows_));
  if (columns_.empty()) n_rows_ = c.size();
  index_[c.name] = columns_.size();
  columns_.push_back(std::move(c));
}

void Dataset::replace_column(Column c) {
  std::size_t i = index_of(c.name);
  if (c.size() != n_rows_) throw DataError("column '" + c.name + "' has wrong length");
  columns_[i] = std::move(c);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  std::size_t i = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field in CSV");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  return !std::isnan(out);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& na_token) {
  auto rows = split_csv(text);
  if (rows.empty()) throw DataError("empty CSV input");
  const auto header = rows.front();
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) throw DataError("duplicate header name '" + h + "'");
  }
  const std::size_t n = rows.size() - 1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                      " fields, expected " + std::to_string(header.size()));
  }
  Dataset ds;
  for (std::size_t j = 0; j < header.size(); ++j) {
    Column col;
    col.name = header[j];
    col.missing.assign(n, false);
    std::vector<std::string> cells(n);
    bool numeric = true;
    for (std::size_t r = 0; r < n; ++r) {
      cells[r] = trim(rows[r + 1][j]);
      if (cells[r].empty() || cells[r] == na_token) {
        col.missing[r] = true;
        continue;
      }
      double v;
      if (!parse_number(cells[r], v)) numeric = false;
    }
    if (numeric) {
      col.numbers.assign(n, std::nan(""));
      for (std::size_t r = 0; r < n; ++r)
        if (!col.missing[r]) parse_number(cells[r], col.numbers[r]);
    } else {
      col.categorical = true;
      col.codes.assign(n, -1);
      std::map<std::string, int> lookup;
      for (std::size_t r = 0; r < n; ++r) {
        if (col.missing[r]) continue;
        auto [it, inserted] = lookup.emplace(cells[r], static_cast<int>(col.categories.size()));
        if (inserted) col.categories.push_back(cells[r]);
        col.codes[r] = it->second;
      }
      // logical columns: FALSE before TRUE
      if (col.categories.size() == 2) {
        std::set<std::string> labs(col.categories.begin(), col.categories.end());
        if (labs == std::set<std::string>{"FALSE", "TRUE"} && col.categories[0] == "TRUE") {
          std::swap(col.categories[0], col.categories[1]);
          for (auto& c : col.codes)
            if (c >= 0) c = 1 - c;
        }
      }
    }
    ds.add_column(std::move(col));
  }
  if (ds.n_cols() == 0) throw DataError("CSV has no columns");
  return ds;
}

Dataset read_csv(const std::string& path, const std::string& na_token) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), na_token);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + csv_escape(header[j]);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + csv_escape(row[j]);
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << format_csv(header, rows);
}

// ---------------------------------------------------------------------------
// Typing and levels

const char* vtype_name(VType t) {
  switch (t) {
    case VType::Continuous: return "continuous";
    case VType::Binary: return "binary";
    case VType::Unordered: return "unordered";
    case VType::Ordered: return "ordered";
  }
  return "?";
}

Grouping make_grouping(const Dataset& ds, const std::string& variable) {
  const Column& c = ds.column(variable);
  if (c.n_missing() > 0) throw DataError("grouping variable '" + variable + "' has missing values");
  Grouping g;
  g.variable = variable;
  g.row_group.resize(c.size());
  std::map<std::string, std::size_t> lookup;
  for (std::size_t r = 0; r < c.size(); ++r) {
    std::string key = c.cell_text(r);
    auto [it, inserted] = lookup.emplace(key, g.rows.size());
    if (inserted) {
      g.rows.emplace_back();
      g.labels.push_back(key);
    }
    g.row_group[r] = it->second;
    g.rows[it->second].push_back(r);
  }
  return g;
}

bool is_group_constant(const Column& col, const Grouping& g) {
  for (const auto& rows : g.rows) {
    bool first_missing = col.missing[rows.front()];
    double first = col.value(rows.front());
    for (std::size_t r : rows) {
      if (col.missing[r] != first_missing) return false;
      if (!col.missing[r] && col.value(r) != first) return false;
    }
  }
  return true;
}

namespace {

Column to_factor(const Column& c, std::vector<std::string> levels) {
  Column f;
  f.name = c.name;
  f.categorical = true;
  f.missing = c.missing;
  f.codes.assign(c.size(), -1);
  if (levels.empty()) {
    if (c.categorical) {
      levels = c.categories;
    } else {
      std::set<double> vals;
      for (std::size_t r = 0; r < c.size(); ++r)
        if (!c.missing[r]) vals.insert(c.numbers[r]);
      for (double v : vals) levels.push_back(format_double(v));
    }
  }
  f.categories = levels;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c.missing[r]) continue;
    std::string lab = c.categorical ? c.categories[c.codes[r]] : format_double(c.numbers[r]);
    auto it = std::find(levels.begin(), levels.end(), lab);
    if (it == levels.end()) throw DataError("value '" + lab + "' of '" + c.name + "' is not among the declared levels");
    f.codes[r] = static_cast<int>(it - levels.begin());
  }
  return f;
}

}  // namespace

Dataset apply_types(const Dataset& ds, const std::map<std::string, TypeOverride>& overrides) {
  for (const auto& [name, ov] : overrides)
    if (!ds.has(name)) throw ConfigError("type override for unknown variable '" + name + "'");
  std::vector<Column> cols;
  for (const Column& c : ds.columns()) {
    auto it = overrides.find(c.name);
    const TypeOverride* ov = it == overrides.end() ? nullptr : &it->second;
    if (ov && ov->vtype) {
      switch (*ov->vtype) {
        case VType::Continuous:
          if (c.categorical) throw ConfigError("variable '" + c.name + "' is not numeric and cannot be continuous");
          cols.push_back(c);
          break;
        case VType::Binary:
        case VType::Unordered:
        case VType::Ordered: {
          Column f = to_factor(c, ov->levels);
          f.ordered = *ov->vtype == VType::Ordered;
          if (*ov->vtype == VType::Binary && f.categories.size() != 2)
            throw ConfigError("variable '" + c.name + "' declared binary but has " +
                              std::to_string(f.categories.size()) + " categories");
          cols.push_back(std::move(f));
          break;
        }
      }
      continue;
    }
    if (ov && !ov->levels.empty()) {
      cols.push_back(to_factor(c, ov->levels));
      continue;
    }
    if (!c.categorical) {
      std::set<double> vals;
      for (std::size_t r = 0; r < c.size() && vals.size() < 3; ++r)
        if (!c.missing[r]) vals.insert(c.numbers[r]);
      if (vals.size() == 2) {
        cols.push_back(to_factor(c, {}));
        continue;
      }
    }
    cols.push_back(c);
  }
  return Dataset(std::move(cols));
}

std::vector<VariableMeta> infer_variable_meta(const Dataset& ds, const Grouping* grouping,
                                              const std::map<std::string, TypeOverride>& overrides) {
  std::vector<VariableMeta> out;
  for (const Column& c : ds.columns()) {
    VariableMeta m;
    m.name = c.name;
    if (c.categorical) {
      m.n_categories = c.categories.size();
      m.categories = c.categories;
      m.ref_cat = c.categories.empty() ? std::string() : c.categories.front();
      if (m.n_categories <= 2) m.vtype = VType::Binary;
      else m.vtype = c.ordered ? VType::Ordered : VType::Unordered;
    } else {
      m.vtype = VType::Continuous;
      std::set<double> vals;
      std::vector<double> obs;
      for (std::size_t r = 0; r < c.size(); ++r)
        if (!c.missing[r]) {
          vals.insert(c.numbers[r]);
          obs.push_back(c.numbers[r]);
        }
      if (vals.size() >= 2) {
        auto s = scaling_stats(obs);
        m.scale_mean = s.mean;
        m.scale_sd = s.sd;
      }
    }
    bool level2 = false;
    if (grouping && c.name != grouping->variable) level2 = is_group_constant(c, *grouping);
    auto it = overrides.find(c.name);
    if (it != overrides.end() && it->second.level) {
      const std::string& lv = *it->second.level;
      if (lv == "lvlone") {
        level2 = false;
      } else {
        if (!grouping || lv != grouping->variable)
          throw ConfigError("variable '" + c.name + "' declared at unknown level '" + lv + "'");
        if (!is_group_constant(c, *grouping))
          throw ConfigError("variable '" + c.name + "' is not constant within '" + lv + "' groups");
        level2 = true;
      }
    }
    if (level2) {
      m.level = grouping->variable;
      for (const auto& rows : grouping->rows)
        if (c.missing[rows.front()]) ++m.n_missing;
    } else {
      m.level = "lvlone";
      m.n_missing = c.n_missing();
    }
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Missing-data pattern

MdPattern md_pattern(const Dataset& ds) {
  MdPattern p;
  const std::size_t k = ds.n_cols();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> miss(k);
  for (std::size_t j = 0; j < k; ++j) miss[j] = ds.column(j).n_missing();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return miss[a] < miss[b]; });
  for (std::size_t j : order) {
    p.columns.push_back(ds.column(j).name);
    p.missing_per_column.push_back(miss[j]);
  }
  std::map<std::vector<int>, std::size_t> counts;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    std::vector<int> pat;
    pat.reserve(k);
    for (std::size_t j : order) pat.push_back(ds.column(j).missing[r] ? 0 : 1);
    ++counts[pat];
  }
  std::vector<std::pair<std::vector<int>, std::size_t>> rows(counts.begin(), counts.end());
  // map order is lexicographic on the bit-string, so a stable sort by count keeps that tie-break
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [pat, n] : rows) {
    p.patterns.push_back(pat);
    p.counts.push_back(n);
  }
  return p;
}

std::string md_pattern_csv(const MdPattern& p) {
  std::vector<std::string> header = p.columns;
  header.push_back("count");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < p.patterns.size(); ++i) {
    std::vector<std::string> row;
    for (int v : p.patterns[i]) row.push_back(std::to_string(v));
    row.push_back(std::to_string(p.counts[i]));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> totals;
  for (std::size_t m : p.missing_per_column) totals.push_back(std::to_string(m));
  std::size_t total = std::accumulate(p.missing_per_column.begin(), p.missing_per_column.end(), std::size_t{0});
  totals.push_back(std::to_string(total));
  rows.push_back(std::move(totals));
  return format_csv(header, rows);
}

void write_md_pattern_csv(const MdPattern& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << md_pattern_csv(p);
}

// ---------------------------------------------------------------------------
// Scaling

ScalingStats scaling_stats(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  if (n < 2) throw DataError("scaling needs at least two observed values");
  ScalingStats s;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : values)
    if (!std::isnan(v)) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (n - 1));
  if (!(s.sd > 0.0)) throw DataError("cannot scale a variable with zero standard deviation");
  return s;
}

std::vector<double> apply_scaling(const std::vector<double>& values, const ScalingStats& s) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - s.mean) / s.sd;
  return out;
}

std::vector<double> unapply_scaling(const std::vector<double>& values, const ScalingStats& s) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * s.sd + s.mean;
  return out;
}

// ---------------------------------------------------------------------------
// Reference categories and contrasts

std::string resolve_refcat(const std::string& spec, const Column& col) {
  if (!col.categorical) throw ConfigError("reference category requested for non-categorical '" + col.name + "'");
  const auto& cats = col.categories;
  if (cats.empty()) throw DataError("variable '" + col.name + "' has no observed categories");
  if (spec.empty() || spec == "first") return cats.front();
  if (spec == "last") return cats.back();
  if (spec == "largest") {
    std::vector<std::size_t> counts(cats.size(), 0);
    for (std::size_t r = 0; r < col.size(); ++r)
      if (!col.missing[r]) ++counts[col.codes[r]];
    auto it = std::max_element(counts.begin(), counts.end());  // first maximum = lowest order
    return cats[it - counts.begin()];
  }
  if (std::find(cats.begin(), cats.end(), spec) != cats.end()) return spec;
  int idx = 0;
  auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), idx);
  if (ec == std::errc() && ptr == spec.data() + spec.size()) {
    if (idx < 1 || idx > static_cast<int>(cats.size()))
      throw ConfigError("reference index " + spec + " out of range for '" + col.name + "'");
    return cats[idx - 1];
  }
  throw ConfigError("unknown reference category '" + spec + "' for '" + col.name + "'");
}

Coding parse_coding(const std::string& s) {
  if (s == "dummy" || s == "contr.treatment") return Coding::Dummy;
  if (s == "effect" || s == "contr.sum") return Coding::Effect;
  throw ConfigError("unsupported contrast coding '" + s + "' (use dummy or effect)");
}

ContrastColumns encode_contrasts(const Column& col, const std::string& ref_cat, Coding coding) {
  if (!col.categorical) throw ConfigError("contrasts requested for non-categorical '" + col.name + "'");
  auto it = std::find(col.categories.begin(), col.categories.end(), ref_cat);
  if (it == col.categories.end()) throw ConfigError("'" + ref_cat + "' is not a category of '" + col.name + "'");
  const int ref = static_cast<int>(it - col.categories.begin());
  ContrastColumns out;
  for (int k = 0; k < static_cast<int>(col.categories.size()); ++k) {
    if (k == ref) continue;
    out.names.push_back(col.name + col.categories[k]);
    out.category.push_back(k);
    std::vector<double> v(col.size());
    for (std::size_t r = 0; r < col.size(); ++r)
      v[r] = col.missing[r] ? std::nan("") : contrast_value(col.codes[r], k, ref, coding);
    out.values.push_back(std::move(v));
  }
  return out;
}

}  // namespace jointgibbs
