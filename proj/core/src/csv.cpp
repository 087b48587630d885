#include "fedfair/csv.hpp"

#include <charconv>
#include <fstream>
#include <unordered_map>

#include "fedfair/errors.hpp"

namespace fedfair {
namespace {

// One CSV record; handles quoted fields and trailing \r.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace

CsvLoadResult load_csv(const CsvSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw ConfigError("load_csv: cannot open '" + spec.path + "'");
  if (spec.feature_cols.empty()) throw ConfigError("load_csv: feature_cols is empty");

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("load_csv: '" + spec.path + "' is empty");
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < header.size(); ++i) col_index.emplace(header[i], i);

  auto require_col = [&](const std::string& name) -> std::size_t {
    const auto it = col_index.find(name);
    if (it == col_index.end())
      throw ConfigError("load_csv: column '" + name + "' not found in '" + spec.path + "'");
    return it->second;
  };

  std::vector<std::size_t> feature_idx;
  feature_idx.reserve(spec.feature_cols.size());
  for (const auto& c : spec.feature_cols) feature_idx.push_back(require_col(c));
  const std::size_t label_idx = require_col(spec.label_col);
  const std::size_t protected_idx = require_col(spec.protected_col);
  std::optional<std::size_t> partition_idx;
  if (spec.partition_col) partition_idx = require_col(*spec.partition_col);

  const int d = static_cast<int>(feature_idx.size());
  std::vector<double> features;
  std::vector<std::uint8_t> labels, groups;
  std::vector<std::string> keys;
  long dropped = 0;

  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    auto field = [&](std::size_t idx) -> std::optional<std::string> {
      if (idx >= fields.size()) return std::nullopt;
      return fields[idx];
    };

    std::vector<double> xs(static_cast<std::size_t>(d));
    bool ok = true;
    for (std::size_t j = 0; j < feature_idx.size() && ok; ++j) {
      const auto raw = field(feature_idx[j]);
      const auto v = raw ? parse_double(*raw) : std::nullopt;
      if (!v) ok = false;
      else xs[j] = *v;
    }

    std::uint8_t y = 0, a = 0;
    if (ok) {
      const auto raw = field(label_idx);
      const auto v = raw ? parse_double(*raw) : std::nullopt;
      if (!v || (*v != 0.0 && *v != 1.0)) {
        if (v) throw ValidationError("load_csv: label column '" + spec.label_col + "' is not binary");
        ok = false;
      } else {
        y = static_cast<std::uint8_t>(*v);
      }
    }
    if (ok) {
      const auto raw = field(protected_idx);
      const auto v = raw ? parse_double(*raw) : std::nullopt;
      if (!v) {
        ok = false;
      } else if (spec.protected_threshold) {
        a = *v > *spec.protected_threshold ? 1 : 0;
      } else if (*v == 0.0 || *v == 1.0) {
        a = static_cast<std::uint8_t>(*v);
      } else {
        throw ValidationError("load_csv: protected column '" + spec.protected_col +
                              "' is not binary and no protected_threshold was given");
      }
    }
    std::string key;
    if (ok && partition_idx) {
      const auto raw = field(*partition_idx);
      if (!raw || raw->empty()) ok = false;
      else key = *raw;
    }

    if (!ok) {
      ++dropped;
      continue;
    }
    features.insert(features.end(), xs.begin(), xs.end());
    labels.push_back(y);
    groups.push_back(a);
    if (partition_idx) keys.push_back(std::move(key));
  }

  if (labels.empty())
    throw ValidationError("load_csv: no usable rows in '" + spec.path + "'");

  CsvLoadResult out;
  out.data = TabularDataset(d, std::move(features), std::move(labels), std::move(groups));
  out.partition_keys = std::move(keys);
  out.dropped_rows = dropped;
  return out;
}

}  // namespace fedfair
