#include "pai/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pai/errors.hpp"

namespace pai {

void Dataset::validate() const {
  if (dim <= 0) throw DataError("Dataset: dim must be positive");
  if (labeled.size() < 2) throw DataError("Dataset: need at least 2 labeled rows");
  if (unlabeled.empty()) throw DataError("Dataset: need at least 1 unlabeled row");
  for (const auto& s : labeled) {
    if (static_cast<int>(s.x.size()) != dim)
      throw DataError("Dataset: labeled feature length != dim");
  }
  for (const auto& s : unlabeled) {
    if (static_cast<int>(s.x.size()) != dim)
      throw DataError("Dataset: unlabeled feature length != dim");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trimmed(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const std::string t = trimmed(cell);
  const char* first = t.data();
  const char* last = t.data() + t.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw DataError("CSV parse error at row " + std::to_string(row) +
                    ", column '" + col + "': '" + cell + "'");
  }
  return value;
}

}  // namespace

Dataset load_dataset(const std::string& path, const CsvSchema& schema) {
  if (schema.feature_columns.empty())
    throw ArgumentError("load_dataset: schema names no feature columns");
  std::ifstream in(path);
  if (!in) throw DataError("load_dataset: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("load_dataset: empty file");
  const auto header = split_csv_line(line);

  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trimmed(header[i]) == name) return i;
    }
    throw ArgumentError("load_dataset: column '" + name + "' not found in header");
  };

  std::vector<std::size_t> feat_idx;
  for (const auto& name : schema.feature_columns) feat_idx.push_back(column_index(name));
  const std::size_t pred_idx = column_index(schema.prediction_column);
  std::optional<std::size_t> label_idx;
  if (schema.label_column) label_idx = column_index(*schema.label_column);

  Dataset ds;
  ds.dim = static_cast<int>(feat_idx.size());
  std::size_t row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    if (trimmed(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("CSV row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    std::vector<double> x;
    x.reserve(feat_idx.size());
    for (std::size_t i = 0; i < feat_idx.size(); ++i) {
      x.push_back(parse_cell(cells[feat_idx[i]], row, schema.feature_columns[i]));
    }
    const double f = parse_cell(cells[pred_idx], row, schema.prediction_column);
    const bool has_label =
        label_idx && !trimmed(cells[*label_idx]).empty();
    if (has_label) {
      const double y = parse_cell(cells[*label_idx], row, *schema.label_column);
      ds.labeled.push_back({std::move(x), y, f});
    } else {
      ds.unlabeled.push_back({std::move(x), f});
    }
  }
  if (ds.labeled.empty() && ds.unlabeled.empty())
    throw DataError("load_dataset: no data rows in '" + path + "'");
  return ds;
}

Dataset obfuscate_split(const Dataset& ds, std::size_t n, RandomSource& rng) {
  const std::size_t M = ds.labeled.size();
  if (!ds.unlabeled.empty())
    throw ArgumentError("obfuscate_split: input must be fully labeled");
  if (n < 2 || n > M - 1)
    throw ArgumentError("obfuscate_split: n must satisfy 2 <= n <= M-1");

  // partial Fisher-Yates: the first n slots become the labeled subset
  std::vector<std::size_t> idx(M);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + rng.below(M - i);
    std::swap(idx[i], idx[j]);
  }

  Dataset out;
  out.dim = ds.dim;
  out.labeled.reserve(n);
  out.unlabeled.reserve(M - n);
  std::vector<bool> keep(M, false);
  for (std::size_t i = 0; i < n; ++i) keep[idx[i]] = true;
  for (std::size_t i = 0; i < M; ++i) {
    const auto& s = ds.labeled[i];
    if (keep[i]) {
      out.labeled.push_back(s);
    } else {
      out.unlabeled.push_back({s.x, s.f});
    }
  }
  return out;
}

}  // namespace pai
