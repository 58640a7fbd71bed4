#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ldsc::textio {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::vector<std::string_view> split(std::string_view line, char sep);

/// Whitespace (tab or space runs) separated fields.
std::vector<std::string_view> split_ws(std::string_view line);

/// Strict parse of the whole field; throws ParseError naming `context`.
double parse_double(std::string_view field, const std::string& context);
long long parse_int(std::string_view field, const std::string& context);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Simulated variant label: snp_000001 for index 0.
std::string variant_id(std::size_t index);

/// Index of `name` in `header`, or -1.
int find_column(const std::vector<std::string_view>& header, std::string_view name);

}  // namespace ldsc::textio
