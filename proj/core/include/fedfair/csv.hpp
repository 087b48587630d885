#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedfair/dataset.hpp"

namespace fedfair {

// Column selection for a headered CSV file.  The protected column is
// binarised as 1[value > protected_threshold] when a threshold is given;
// otherwise it must already contain only 0/1.  Rows with missing or
// non-numeric values in any selected column are dropped and counted.
struct CsvSpec {
  std::string path;
  std::vector<std::string> feature_cols;
  std::string label_col;
  std::string protected_col;
  std::optional<double> protected_threshold;
  std::optional<std::string> partition_col;
};

struct CsvLoadResult {
  TabularDataset data;
  std::vector<std::string> partition_keys;  // aligned with rows; empty if unused
  long dropped_rows = 0;
};

CsvLoadResult load_csv(const CsvSpec& spec);

}  // namespace fedfair
