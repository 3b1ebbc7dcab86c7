#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace solarcoop::csv {

// Reads one RFC-4180 record (quoted fields may span lines). Returns nullopt at
// end of input. `line` is advanced by the number of physical lines consumed.
std::optional<std::vector<std::string>> read_record(std::istream& in, std::size_t& line);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Strict decimal parse of a whole (trimmed) field.
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace solarcoop::csv
