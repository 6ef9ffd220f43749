#include "resmeth/csv.hpp"
#include "resmeth/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace resmeth::csv {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view field, std::size_t line_no)
{
    field = trim(field);
    // strtod handles "inf"/"nan" spellings that from_chars may not on older libstdc++.
    std::string buf(field);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size())
        throw InvalidInput("line " + std::to_string(line_no) + ": cannot parse '" + buf + "'");
    return v;
}

} // namespace

std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Matrix parse_matrix(std::istream& in)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = trim(view);
        if (view.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = view.find(',', start);
            row.push_back(parse_number(view.substr(start, comma - start), line_no));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(rows.front().size()) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw InvalidInput("no numeric rows found");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

Matrix read_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open " + path.string());
    try {
        return parse_matrix(in);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

Vector read_vector(const std::filesystem::path& path)
{
    const Matrix m = read_matrix(path);
    if (m.cols() == 1)
        return m.col(0);
    if (m.rows() == 1)
        return m.row(0).transpose();
    throw InvalidInput(path.string() + ": expected a single row or column");
}

void write_matrix(std::ostream& out, const Matrix& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0)
                out << ',';
            out << format_number(m(i, j));
        }
        out << '\n';
    }
}

void write_vector(std::ostream& out, const Vector& v)
{
    for (double x : v)
        out << format_number(x) << '\n';
}

void write_table(std::ostream& out, const std::string& header,
                 const std::vector<std::vector<double>>& rows)
{
    out << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0)
                out << ',';
            out << format_number(row[j]);
        }
        out << '\n';
    }
}

} // namespace resmeth::csv
