#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pai/random.hpp"

namespace pai {

struct LabeledSample {
  std::vector<double> x;
  double y = 0.0;
  double f = 0.0;

  double residual() const { return y - f; }
};

struct UnlabeledSample {
  std::vector<double> x;
  double f = 0.0;
};

/// The two sample populations: n labeled rows and N unlabeled rows over a
/// common d-dimensional feature space. Predictions are precomputed for every
/// row. Immutable after construction by convention; all estimators take it
/// by const reference.
struct Dataset {
  std::vector<LabeledSample> labeled;
  std::vector<UnlabeledSample> unlabeled;
  int dim = 0;

  std::size_t n() const { return labeled.size(); }
  std::size_t N() const { return unlabeled.size(); }

  /// Throws DataError on dimension mismatch, n < 2, or N < 1.
  void validate() const;
};

/// Column mapping for CSV ingestion. The label column is optional per-row:
/// a blank cell marks the row unlabeled.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::optional<std::string> label_column;
  std::string prediction_column;
};

/// Reads a comma-separated file with a header row. Rows with a blank (or
/// absent) label cell become unlabeled samples. Throws DataError with the
/// offending row/column on malformed cells, ArgumentError on schema problems.
Dataset load_dataset(const std::string& path, const CsvSchema& schema);

/// Keeps a uniform random n-subset of a fully labeled pool as labeled and
/// strips the labels of the rest, preserving predictions everywhere.
/// Requires 2 <= n <= M-1 where M is the pool size.
Dataset obfuscate_split(const Dataset& ds, std::size_t n, RandomSource& rng);

}  // namespace pai
