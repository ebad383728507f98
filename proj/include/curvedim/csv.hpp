#pragma once

#include "curvedim/functional.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace curvedim {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text, std::size_t line, std::size_t column);

/// Splits one CSV line on commas; no quoting support (numeric files only).
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Curve panel file: first row holds the grid points, every further row one curve.
CurvePanel read_panel_csv(std::istream& in);
CurvePanel read_panel_csv(const std::filesystem::path& path);
void write_panel_csv(std::ostream& out, const CurvePanel& panel);
void write_panel_csv(const std::filesystem::path& path, const CurvePanel& panel);

/// Grid row followed by one row per curve; used for eigenfunction exports.
void write_curves_csv(std::ostream& out, const Grid& grid, const std::vector<Curve>& curves);

/// Header row of column names followed by matrix rows.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);

struct Table {
    std::vector<std::string> header;
    Matrix values;
};

/// Numeric table with a header row; the inverse of write_matrix_csv.
Table read_table_csv(std::istream& in);
Table read_table_csv(const std::filesystem::path& path);

}  // namespace curvedim
