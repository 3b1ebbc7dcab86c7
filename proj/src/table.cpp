#include "solarcoop/table.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "solarcoop/billing.hpp"
#include "solarcoop/csv.hpp"
#include "solarcoop/errors.hpp"

namespace solarcoop {

namespace {

std::string format_hundredths(std::int64_t h) {
  const std::uint64_t mag = h < 0 ? static_cast<std::uint64_t>(-(h + 1)) + 1 : static_cast<std::uint64_t>(h);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%02llu", h < 0 ? "-" : "", static_cast<unsigned long long>(mag / 100),
                static_cast<unsigned long long>(mag % 100));
  return buf;
}

bool is_numeric(ColumnKind k) { return k != ColumnKind::Text; }

bool is_summed(ColumnKind k) {
  return k == ColumnKind::Integer || k == ColumnKind::Energy || k == ColumnKind::Money;
}

// Value in display units (hundredths for energy/money/percent, ones for counts).
std::int64_t display_units(ColumnKind k, double v) {
  switch (k) {
    case ColumnKind::Integer: return round_half_even(v);
    case ColumnKind::Energy: return round_half_even(v * 100.0);
    case ColumnKind::Money: return round_half_even(v);  // cents are hundredths of a dollar
    default: return 0;
  }
}

std::string display_cell(const Column& col, const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  const double v = std::get<double>(cell);
  switch (col.kind) {
    case ColumnKind::Integer: return std::to_string(round_half_even(v));
    case ColumnKind::Energy: return format_fixed2(v);
    case ColumnKind::Money: return format_dollars(Money(v));
    case ColumnKind::Percent: return format_percent(v);
    case ColumnKind::Text: break;
  }
  return csv::format_double(v);
}

nlohmann::ordered_json json_cell(const Column& col, const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) {
    if (s->empty() && is_numeric(col.kind)) return nullptr;
    return *s;
  }
  const double v = std::get<double>(cell);
  if (!std::isfinite(v)) return nullptr;
  switch (col.kind) {
    case ColumnKind::Integer: return round_half_even(v);
    case ColumnKind::Money: return whole_cents(Money(v));
    default: return v;
  }
}

// JSON keys carry the unit the value is expressed in.
std::string json_key(const Column& col) {
  if (col.kind == ColumnKind::Money) return col.name + "_cents";
  if (col.kind == ColumnKind::Energy) return col.name + "_kwh";
  if (col.kind == ColumnKind::Percent) return col.name + "_pct";
  return col.name;
}

std::string header_label(const Column& col) {
  if (col.kind == ColumnKind::Money) return col.name + "_usd";
  return json_key(col);
}

}  // namespace

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::Markdown: return "md";
  }
  return "?";
}

OutputFormat parse_output_format(std::string_view text) {
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  if (text == "md" || text == "markdown") return OutputFormat::Markdown;
  throw Error(ErrorKind::InvalidArgument, "unknown format '" + std::string(text) + "' (expected csv, json or md)");
}

std::string_view file_extension(OutputFormat f) { return to_string(f); }

std::int64_t round_half_even(double x) { return whole_cents(Money(x)); }

std::string format_fixed2(double x) { return format_hundredths(round_half_even(x * 100.0)); }

std::string format_percent(double pct) {
  if (!std::isfinite(pct)) return "n/a";
  return format_fixed2(pct);
}

std::string dump_json(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

Table::Table(std::string name, std::vector<Column> columns) : name_(std::move(name)), columns_(std::move(columns)) {
  if (columns_.empty()) throw Error(ErrorKind::InvalidArgument, "table needs at least one column");
}

void Table::add_row(std::vector<Cell> cells) {
  if (cells.size() != columns_.size()) {
    throw Error(ErrorKind::InvalidArgument, "table " + name_ + ": row has " + std::to_string(cells.size()) +
                                                " cells, expected " + std::to_string(columns_.size()));
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (columns_[c].kind == ColumnKind::Text && !std::holds_alternative<std::string>(cells[c])) {
      throw Error(ErrorKind::InvalidArgument, "table " + name_ + ": numeric value in text column " + columns_[c].name);
    }
  }
  rows_.push_back(std::move(cells));
}

// display = true: values are rounded to display units before summing (csv/md).
// display = false: money is summed in whole cents, energy as raw doubles (json).
std::vector<Cell> Table::totals_row(bool display) const {
  std::vector<Cell> out(columns_.size(), Cell{std::string()});
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    if (!is_summed(col.kind)) continue;
    if (display || col.kind != ColumnKind::Energy) {
      std::int64_t units = 0;
      for (const auto& row : rows_) {
        if (const auto* v = std::get_if<double>(&row[c])) units += display_units(col.kind, *v);
      }
      out[c] = col.kind == ColumnKind::Energy ? static_cast<double>(units) / 100.0 : static_cast<double>(units);
    } else {
      double sum = 0.0;
      for (const auto& row : rows_) {
        if (const auto* v = std::get_if<double>(&row[c])) sum += *v;
      }
      out[c] = sum;
    }
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    if (col.kind != ColumnKind::Percent || !col.ratio) continue;
    const auto* num = std::get_if<double>(&out[col.ratio->first]);
    const auto* den = std::get_if<double>(&out[col.ratio->second]);
    if (!num || !den) continue;
    out[c] = *den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : *num / std::abs(*den) * 100.0;
  }
  out[0] = *totals_label_;
  return out;
}

std::string Table::to_csv() const {
  std::ostringstream out;
  std::vector<std::string> fields;
  for (const auto& col : columns_) fields.push_back(header_label(col));
  csv::write_record(out, fields);
  auto emit = [&](const std::vector<Cell>& row) {
    fields.clear();
    for (std::size_t c = 0; c < columns_.size(); ++c) fields.push_back(display_cell(columns_[c], row[c]));
    csv::write_record(out, fields);
  };
  for (const auto& row : rows_) emit(row);
  if (totals_label_) emit(totals_row(true));
  return out.str();
}

std::string Table::to_markdown() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (const auto& c : cells) {
      out << ' ';
      for (char ch : c) {
        if (ch == '|') out << '\\';
        out << ch;
      }
      out << " |";
    }
    out << '\n';
  };
  std::vector<std::string> cells;
  for (const auto& col : columns_) cells.push_back(header_label(col));
  line(cells);
  out << '|';
  for (const auto& col : columns_) out << (is_numeric(col.kind) ? " ---: |" : " --- |");
  out << '\n';
  auto emit = [&](const std::vector<Cell>& row, bool bold) {
    cells.clear();
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      std::string s = display_cell(columns_[c], row[c]);
      if (bold && !s.empty()) s = "**" + s + "**";
      cells.push_back(std::move(s));
    }
    line(cells);
  };
  for (const auto& row : rows_) emit(row, false);
  if (totals_label_) emit(totals_row(true), true);
  return out.str();
}

nlohmann::ordered_json Table::to_json() const {
  nlohmann::ordered_json doc;
  doc["schema"] = kSchemaVersion;
  doc["table"] = name_;
  for (const auto& [k, v] : meta_.items()) doc[k] = v;
  auto to_obj = [&](const std::vector<Cell>& row) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < columns_.size(); ++c) obj[json_key(columns_[c])] = json_cell(columns_[c], row[c]);
    return obj;
  };
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows_) doc["rows"].push_back(to_obj(row));
  if (totals_label_) doc["totals"] = to_obj(totals_row(false));
  return doc;
}

std::string Table::render(OutputFormat format) const {
  switch (format) {
    case OutputFormat::Csv: return to_csv();
    case OutputFormat::Json: return dump_json(to_json());
    case OutputFormat::Markdown: return to_markdown();
  }
  return {};
}

}  // namespace solarcoop
