#pragma once

#include "resmeth/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace resmeth::csv {

/// Decimal with 17 significant digits ("%.17g"), enough to round-trip a double.
std::string format_number(double v);

/// Parses comma-separated rows; blank lines and text after '#' are ignored.
/// All rows must have the same number of columns.
Matrix parse_matrix(std::istream& in);
Matrix read_matrix(const std::filesystem::path& path);

/// Accepts either a single column or a single row.
Vector read_vector(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const Matrix& m);
void write_vector(std::ostream& out, const Vector& v);

/// Writes `header` followed by one comma-joined line per row.
void write_table(std::ostream& out, const std::string& header,
                 const std::vector<std::vector<double>>& rows);

} // namespace resmeth::csv
