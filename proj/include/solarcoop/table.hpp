#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace solarcoop {

enum class OutputFormat { Csv, Json, Markdown };

std::string_view to_string(OutputFormat f);
OutputFormat parse_output_format(std::string_view text);  // csv | json | md
std::string_view file_extension(OutputFormat f);          // csv | json | md

enum class ColumnKind {
  Text,     // free text
  Integer,  // counts
  Energy,   // kWh; two decimals in csv/md, shortest round-trip double in json
  Money,    // cents internally; dollars with two decimals in csv/md, integer cents in json
  Percent,  // two decimals in csv/md ("n/a" for NaN), double or null in json
};

struct Column {
  Column(std::string name_, ColumnKind kind_ = ColumnKind::Text,
         std::optional<std::pair<std::size_t, std::size_t>> ratio_ = std::nullopt)
      : name(std::move(name_)), kind(kind_), ratio(ratio_) {}

  std::string name;
  ColumnKind kind = ColumnKind::Text;
  // Totals-row behaviour. Energy/Money/Integer columns are summed. A percent
  // column with a ratio is recomputed from the summed numerator and
  // denominator columns as num / |den| * 100; without one it is left blank.
  std::optional<std::pair<std::size_t, std::size_t>> ratio;
};

// One cell: text, or a number interpreted per the column kind.
using Cell = std::variant<std::string, double>;

// A rectangular result table with an optional totals row. Totals are computed
// from the values as displayed, so the printed totals always equal the sum of
// the printed column.
class Table {
 public:
  Table(std::string name, std::vector<Column> columns);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

  void add_row(std::vector<Cell> cells);  // throws InvalidArgument on arity/type mismatch
  // Append a totals row when rendering; `label` goes into the first column.
  void set_totals(std::string label) { totals_label_ = std::move(label); }
  const std::optional<std::string>& totals_label() const noexcept { return totals_label_; }

  // Free-form metadata copied into the JSON document (prices, mechanism, ...).
  nlohmann::ordered_json& meta() noexcept { return meta_; }
  const nlohmann::ordered_json& meta() const noexcept { return meta_; }

  std::string render(OutputFormat format) const;
  std::string to_csv() const;
  std::string to_markdown() const;
  nlohmann::ordered_json to_json() const;

 private:
  std::vector<Cell> totals_row(bool display) const;

  std::string name_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::optional<std::string> totals_label_;
  nlohmann::ordered_json meta_ = nlohmann::ordered_json::object();
};

// Display helpers shared with other renderers.
std::int64_t round_half_even(double x);
std::string format_fixed2(double x);  // half-even to hundredths, "-0.00" never printed
std::string format_percent(double pct);

// JSON documents all carry this schema tag.
inline constexpr std::string_view kSchemaVersion = "v1";

std::string dump_json(const nlohmann::ordered_json& doc);  // two-space indent, trailing newline

}  // namespace solarcoop
