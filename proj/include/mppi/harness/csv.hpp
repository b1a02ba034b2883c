#pragma once

#include "mppi/run_task.hpp"

#include <string>
#include <vector>

namespace mppi {

/// Shortest text that reads back to the same double: %.17g, with "nan",
/// "inf" and "-inf" for non-finite values.
std::string format_double(double v);
/// Inverse of format_double; throws std::invalid_argument on bad text.
double parse_csv_double(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
};

/// Comma-separated, no quoting; fields must not contain commas or newlines.
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
/// Throws IoError when the file cannot be read.
CsvTable read_csv(const std::string& path);

/// Columns t, reported state components, control components, running_cost.
CsvTable run_log_table(const RunLog& log);

/// Writes `content` to `path`, creating parent directories; throws IoError.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mppi
