#include "vnscene/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "vnscene/dataset_io.hpp"
#include "vnscene/utf8.hpp"

namespace vnscene::report {

using nlohmann::ordered_json;

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("table '" + name + "': row has " + std::to_string(row.size()) +
                                " cells, expected " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

Format parse_format(std::string_view name) {
  if (name == "table") return Format::table;
  if (name == "delimited") return Format::delimited;
  if (name == "document") return Format::document;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  std::string s = buf;
  return s == "-0" ? "0" : s;
}

std::string cell_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_number(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      cell);
}

namespace {

ordered_json cell_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return format_number(v);
          return std::stod(format_number(v));
        } else {
          return v;
        }
      },
      cell);
}

// Tabs and newlines would break the delimited layout.
std::string sanitize(std::string s) {
  for (auto& ch : s) {
    if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

std::string render_delimited(const Report& report) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += '\t';
      out += sanitize(fields[i]);
    }
    out += '\n';
  };
  // A lone table is written bare so the file is plain TSV.
  const bool bare = report.summary.empty() && report.tables.size() == 1;
  bool first = true;
  if (!report.summary.empty()) {
    out += "# summary\n";
    line({"key", "value"});
    for (const auto& [k, v] : report.summary) line({k, cell_text(v)});
    first = false;
  }
  for (const auto& t : report.tables) {
    if (!first) out += '\n';
    first = false;
    if (!bare) out += "# " + t.name + "\n";
    line(t.columns);
    for (const auto& row : t.rows) {
      std::vector<std::string> fields;
      for (const auto& c : row) fields.push_back(cell_text(c));
      line(fields);
    }
  }
  return out;
}

std::string render_document(const Report& report) {
  ordered_json doc;
  doc["title"] = report.title;
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : report.summary) summary[k] = cell_json(v);
  doc["summary"] = summary;
  ordered_json tables = ordered_json::object();
  for (const auto& t : report.tables) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json obj;
      for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
      rows.push_back(std::move(obj));
    }
    tables[t.name] = {{"columns", t.columns}, {"rows", rows}};
  }
  doc["tables"] = tables;
  if (!report.notices.empty()) doc["notices"] = report.notices;
  return doc.dump(2) + "\n";
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  const auto len = utf8::length(s);
  if (len >= width) return s;
  const std::string fill(width - len, ' ');
  return right ? fill + s : s + fill;
}

std::string render_table(const Report& report) {
  std::string out;
  if (!report.title.empty()) out += report.title + "\n\n";
  if (!report.summary.empty()) {
    std::size_t kw = 0;
    for (const auto& [k, v] : report.summary) kw = std::max(kw, utf8::length(k));
    for (const auto& [k, v] : report.summary) out += pad(k, kw, false) + "  " + cell_text(v) + "\n";
    out += '\n';
  }
  for (const auto& t : report.tables) {
    out += "[" + t.name + "]\n";
    std::vector<std::size_t> width(t.columns.size());
    std::vector<bool> numeric(t.columns.size(), true);
    for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = utf8::length(t.columns[i]);
    std::vector<std::vector<std::string>> text;
    for (const auto& row : t.rows) {
      auto& r = text.emplace_back();
      for (std::size_t i = 0; i < row.size(); ++i) {
        r.push_back(cell_text(row[i]));
        width[i] = std::max(width[i], utf8::length(r.back()));
        if (std::holds_alternative<std::string>(row[i])) numeric[i] = false;
      }
    }
    auto emit = [&](const std::vector<std::string>& r, bool header) {
      std::string l;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) l += "  ";
        l += pad(r[i], width[i], numeric[i] && !header);
      }
      while (!l.empty() && l.back() == ' ') l.pop_back();
      out += l + "\n";
    };
    emit(t.columns, true);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
    for (const auto& r : text) emit(r, false);
    out += '\n';
  }
  for (const auto& n : report.notices) out += "note: " + n + "\n";
  return out;
}

}  // namespace

std::string render(const Report& report, Format format) {
  switch (format) {
    case Format::delimited:
      return render_delimited(report);
    case Format::document:
      return render_document(report);
    case Format::table:
      break;
  }
  return render_table(report);
}

void save_report(const Report& report, const std::filesystem::path& path, Format format) {
  dataset_io::write_file(path, render(report, format));
}

}  // namespace vnscene::report
