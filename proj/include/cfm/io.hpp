#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfm/population.hpp"

namespace cfm {

/// Parsed numeric CSV: header row plus a dense body where missing cells are
/// NaN. Quoting follows RFC-4180 (double quotes, doubled to escape).
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows x cols, NaN = missing

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

/// Throws std::runtime_error with a line number on ragged rows or
/// non-numeric body cells. Empty cells parse as missing (NaN).
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Dataset columns are named y1..yp then x1..xq; the reader recovers the
/// split from those prefixes.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

/// Mixed-frequency covariate panel at a monthly index. Quarterly-native
/// series carry values only on the last month of each quarter.
struct CovariatePanel {
  enum class Frequency { Monthly, Quarterly };

  std::vector<std::string> names;
  std::vector<Frequency> frequency;
  Matrix values;  // months x q, NaN where a series has no observation

  int months() const { return static_cast<int>(values.rows()); }
  int series() const { return static_cast<int>(values.cols()); }
  void validate() const;  // alignment of quarterly series, unique names
};

/// Frequency is inferred per column: all cells present -> monthly; present
/// exactly on quarter-end months -> quarterly; anything else -> error.
CovariatePanel read_panel_csv(const std::string& path);

/// 3-month means for monthly series, pass-through of the quarter-end value
/// for quarterly-native series. A trailing partial quarter is dropped (the
/// count is reported through *dropped_months when non-null).
Dataset quarterly_average(const CovariatePanel& panel,
                          int* dropped_months = nullptr);
Dataset quarterly_average(const Dataset& monthly, int* dropped_months = nullptr);

}  // namespace cfm
