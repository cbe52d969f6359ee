#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/error.hpp"

namespace tsxfidel::dataset {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

int parse_int_field(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) {
    throw Error(ErrorCode::kUnparseableCell, "timestamp '" + std::string(text) + "'");
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc() || ptr != text.data() + pos + len) {
    throw Error(ErrorCode::kUnparseableCell, "timestamp '" + std::string(text) + "'");
  }
  return value;
}

struct Row {
  std::size_t line = 0;
  std::int64_t timestamp = 0;
  std::vector<std::string> cells;  // schema order
};

}  // namespace

std::int64_t parse_iso8601(std::string_view text) {
  // Accepted: YYYY-MM-DD, YYYY-MM-DD[T| ]HH:MM[:SS][Z]
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorCode::kUnparseableCell, "timestamp '" + std::string(text) + "'");
  }
  const int y = parse_int_field(text, 0, 4);
  const int mo = parse_int_field(text, 5, 2);
  const int d = parse_int_field(text, 8, 2);
  int hh = 0;
  int mm = 0;
  int ss = 0;
  std::size_t pos = 10;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    hh = parse_int_field(text, pos + 1, 2);
    if (pos + 3 >= text.size() || text[pos + 3] != ':') {
      throw Error(ErrorCode::kUnparseableCell, "timestamp '" + std::string(text) + "'");
    }
    mm = parse_int_field(text, pos + 4, 2);
    pos += 6;
    if (pos < text.size() && text[pos] == ':') {
      ss = parse_int_field(text, pos + 1, 2);
      pos += 3;
    }
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size() || hh > 23 || mm > 59 || ss > 59) {
    throw Error(ErrorCode::kUnparseableCell, "timestamp '" + std::string(text) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw Error(ErrorCode::kUnparseableCell, "timestamp '" + std::string(text) + "'");
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::vector<RawSeries> load_csv(const std::filesystem::path& path,
                                std::span<const FeatureSpec> schema,
                                Granularity granularity, const CsvOptions& options) {
  validate_schema(schema);
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kMissingColumn, path.string() + ": empty file, header row required");
  }
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of[trim(header[c])] = c;

  auto require = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) {
      throw Error(ErrorCode::kMissingColumn, path.string() + ": column '" + name + "' not in header");
    }
    return it->second;
  };
  const std::size_t ts_col = require(options.timestamp_column);
  const auto series_it = column_of.find(options.series_column);
  const bool has_series = series_it != column_of.end();
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema) feature_cols.push_back(require(f.name));

  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows_by_series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kUnparseableCell,
                  path.string() + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    Row row;
    row.line = line_no;
    try {
      row.timestamp = parse_iso8601(trim(fields[ts_col]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kUnparseableCell, path.string() + ": row " + std::to_string(line_no) +
                                                   ", column '" + options.timestamp_column +
                                                   "': " + e.what());
    }
    for (std::size_t c : feature_cols) row.cells.push_back(trim(fields[c]));
    const std::string id = has_series ? trim(fields[series_it->second]) : std::string("series");
    auto [it, inserted] = rows_by_series.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(std::move(row));
  }

  // Categorical features are integer-encoded by sorted distinct value, so the
  // code book does not depend on row order.
  std::vector<std::map<std::string, double>> codes(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind != FeatureKind::kCategoricalEncoded) continue;
    std::set<std::string> distinct;
    for (const auto& [id, rows] : rows_by_series) {
      for (const auto& r : rows) {
        if (!r.cells[j].empty()) distinct.insert(r.cells[j]);
      }
    }
    double next = 0.0;
    for (const auto& v : distinct) codes[j][v] = next++;
  }

  const std::int64_t step = granularity_seconds(granularity);
  std::vector<RawSeries> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& rows = rows_by_series[id];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.timestamp < b.timestamp; });
    RawSeries s;
    s.series_id = id;
    s.granularity = granularity;
    s.features.assign(schema.begin(), schema.end());
    s.values = Matrix(rows.size(), schema.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (t > 0) {
        if (rows[t].timestamp <= rows[t - 1].timestamp) {
          throw Error(ErrorCode::kNonMonotonicTimestamps,
                      path.string() + ": row " + std::to_string(rows[t].line) + " of series '" +
                          id + "' repeats the timestamp of row " +
                          std::to_string(rows[t - 1].line));
        }
        if (rows[t].timestamp - rows[t - 1].timestamp != step) {
          throw Error(ErrorCode::kIrregularTimestamps,
                      path.string() + ": row " + std::to_string(rows[t].line) + " of series '" +
                          id + "' is not one step after row " + std::to_string(rows[t - 1].line));
        }
      }
      s.timestamps.push_back(rows[t].timestamp);
      for (std::size_t j = 0; j < schema.size(); ++j) {
        const std::string& cell = rows[t].cells[j];
        double v = 0.0;
        if (cell.empty()) {
          throw Error(ErrorCode::kUnparseableCell, path.string() + ": row " +
                                                       std::to_string(rows[t].line) + ", column '" +
                                                       schema[j].name + "': missing value");
        }
        if (schema[j].kind == FeatureKind::kCategoricalEncoded) {
          v = codes[j].at(cell);
        } else if (!parse_double(cell, v)) {
          throw Error(ErrorCode::kUnparseableCell, path.string() + ": row " +
                                                       std::to_string(rows[t].line) + ", column '" +
                                                       schema[j].name + "': '" + cell + "'");
        }
        s.values(t, j) = v;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tsxfidel::dataset
