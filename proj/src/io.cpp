#include "cfm/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cfm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, int lineno) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted)
    throw std::runtime_error("csv: unterminated quote on line " +
                             std::to_string(lineno));
  out.push_back(cell);
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("csv: empty file " + path);
  CsvTable table;
  table.header = split_csv_line(line, 1);
  const int cols = static_cast<int>(table.header.size());

  std::vector<std::vector<double>> body;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line, lineno);
    if (static_cast<int>(cells.size()) != cols)
      throw std::runtime_error("csv: ragged row on line " +
                               std::to_string(lineno) + " (" +
                               std::to_string(cells.size()) + " cells, want " +
                               std::to_string(cols) + ")");
    std::vector<double> row(cols);
    for (int j = 0; j < cols; ++j) {
      const std::string& c = cells[j];
      if (c.empty()) {
        row[j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      size_t used = 0;
      try {
        row[j] = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size())
        throw std::runtime_error("csv: non-numeric cell '" + c + "' on line " +
                                 std::to_string(lineno));
    }
    body.push_back(std::move(row));
  }
  table.values.resize(static_cast<int>(body.size()), cols);
  for (size_t i = 0; i < body.size(); ++i)
    for (int j = 0; j < cols; ++j)
      table.values(static_cast<int>(i), j) = body[i][j];
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out.precision(17);
  for (size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << quote_if_needed(table.header[j]);
  }
  out << '\n';
  for (int i = 0; i < table.rows(); ++i) {
    for (int j = 0; j < table.cols(); ++j) {
      if (j) out << ',';
      double v = table.values(i, j);
      if (!std::isnan(v)) out << v;
    }
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  CsvTable t;
  for (int i = 0; i < data.p; ++i) t.header.push_back("y" + std::to_string(i + 1));
  for (int j = 0; j < data.q; ++j) t.header.push_back("x" + std::to_string(j + 1));
  t.values = data.rows;
  write_csv(path, t);
}

Dataset read_dataset_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int p = 0, q = 0;
  for (const auto& name : t.header) {
    if (name.rfind("x", 0) == 0 && name.size() > 1)
      ++q;
    else
      ++p;
  }
  if (t.values.hasNaN())
    throw std::runtime_error("dataset csv: missing cells not allowed: " + path);
  return Dataset::from_rows(t.values, p, q);
}

void CovariatePanel::validate() const {
  if (names.size() != frequency.size() ||
      static_cast<int>(names.size()) != series())
    throw std::invalid_argument("panel: inconsistent column metadata");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size())
    throw std::invalid_argument("panel: duplicate series names");
  for (int j = 0; j < series(); ++j) {
    for (int i = 0; i < months(); ++i) {
      bool present = !std::isnan(values(i, j));
      bool quarter_end = (i % 3 == 2);
      if (frequency[j] == Frequency::Quarterly && present && !quarter_end)
        throw std::invalid_argument("panel: quarterly series '" + names[j] +
                                    "' has an off-quarter value at month " +
                                    std::to_string(i + 1));
      if (frequency[j] == Frequency::Monthly && !present)
        throw std::invalid_argument("panel: monthly series '" + names[j] +
                                    "' missing month " + std::to_string(i + 1));
    }
  }
}

CovariatePanel read_panel_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  CovariatePanel panel;
  panel.names = t.header;
  panel.values = t.values;
  panel.frequency.resize(t.cols());
  for (int j = 0; j < t.cols(); ++j) {
    bool any_missing = false, off_quarter_present = false;
    for (int i = 0; i < t.rows(); ++i) {
      bool present = !std::isnan(t.values(i, j));
      if (!present) any_missing = true;
      if (present && i % 3 != 2) off_quarter_present = true;
    }
    if (!any_missing)
      panel.frequency[j] = CovariatePanel::Frequency::Monthly;
    else if (!off_quarter_present)
      panel.frequency[j] = CovariatePanel::Frequency::Quarterly;
    else
      throw std::runtime_error("panel: series '" + t.header[j] +
                               "' is neither monthly-complete nor aligned to "
                               "quarter ends");
  }
  panel.validate();
  return panel;
}

Dataset quarterly_average(const CovariatePanel& panel, int* dropped_months) {
  panel.validate();
  const int quarters = panel.months() / 3;
  if (dropped_months) *dropped_months = panel.months() - 3 * quarters;
  Matrix out(quarters, panel.series());
  for (int t = 0; t < quarters; ++t) {
    for (int j = 0; j < panel.series(); ++j) {
      if (panel.frequency[j] == CovariatePanel::Frequency::Monthly) {
        out(t, j) = panel.values.block(3 * t, j, 3, 1).mean();
      } else {
        double v = panel.values(3 * t + 2, j);
        if (std::isnan(v))
          throw std::runtime_error("panel: quarterly series '" +
                                   panel.names[j] + "' missing quarter " +
                                   std::to_string(t + 1));
        out(t, j) = v;
      }
    }
  }
  return Dataset::from_rows(out, panel.series(), 0);
}

Dataset quarterly_average(const Dataset& monthly, int* dropped_months) {
  const int quarters = monthly.n() / 3;
  if (dropped_months) *dropped_months = monthly.n() - 3 * quarters;
  Matrix out(quarters, monthly.rows.cols());
  for (int t = 0; t < quarters; ++t)
    out.row(t) = monthly.rows.middleRows(3 * t, 3).colwise().mean();
  return Dataset::from_rows(out, monthly.p, monthly.q);
}

}  // namespace cfm
