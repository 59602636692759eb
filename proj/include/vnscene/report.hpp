#pragma once

// Tabular analysis output in three renderings: aligned text for reading,
// tab-delimited text, and a JSON summary document. Field order is the
// insertion order and reals are printed with 6 significant digits, so the
// same report always renders to the same bytes.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace vnscene::report {

using Cell = std::variant<std::string, long long, double, bool>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  // Throws std::invalid_argument when the row width differs from columns.
  void add_row(std::vector<Cell> row);
};

struct Report {
  std::string title;
  std::vector<std::pair<std::string, Cell>> summary;
  std::vector<Table> tables;
  std::vector<std::string> notices;
};

enum class Format { table, delimited, document };

Format parse_format(std::string_view name);
std::string format_number(double value);
std::string cell_text(const Cell& cell);

std::string render(const Report& report, Format format);
// Throws dataset_io::IoError when the file cannot be written.
void save_report(const Report& report, const std::filesystem::path& path, Format format);

}  // namespace vnscene::report
