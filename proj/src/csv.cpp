#include "curvedim/csv.hpp"

#include "curvedim/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace curvedim {

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

double parse_double(std::string_view text, std::size_t line, std::size_t column) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size())
        fail(ErrorKind::Parse, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                   ": not a number: '" + std::string(text) + "'");
    return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

CurvePanel read_panel_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) row.push_back(parse_double(fields[c], line_no, c + 1));
        if (!rows.empty() && row.size() != rows.front().size())
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(rows.front().size()) + " fields, found " +
                                       std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) fail(ErrorKind::Parse, "panel file needs a grid row followed by curve rows");
    require(rows.size() >= 3, ErrorKind::InsufficientSample, "panel file holds fewer than 2 curves");
    const auto m = static_cast<Eigen::Index>(rows.front().size());
    if (m < 2) fail(ErrorKind::Parse, "grid row needs at least 2 points");
    Vector pts = Eigen::Map<const Vector>(rows.front().data(), m);
    for (Eigen::Index i = 1; i < m; ++i)
        if (!(pts[i] > pts[i - 1])) fail(ErrorKind::Parse, "grid row must be strictly increasing");
    Grid grid{std::move(pts)};
    Matrix values(static_cast<Eigen::Index>(rows.size() - 1), m);
    for (std::size_t r = 1; r < rows.size(); ++r)
        values.row(static_cast<Eigen::Index>(r - 1)) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), m);
    if (!values.allFinite()) fail(ErrorKind::Parse, "panel values must be finite");
    return CurvePanel(std::move(grid), std::move(values));
}

CurvePanel read_panel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    return read_panel_csv(in);
}

namespace {

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        out << format_double(row[j]);
    }
    out << '\n';
}

}  // namespace

void write_panel_csv(std::ostream& out, const CurvePanel& panel) {
    write_row(out, panel.grid().points().transpose());
    for (Eigen::Index t = 0; t < panel.values().rows(); ++t) write_row(out, panel.values().row(t));
}

void write_panel_csv(const std::filesystem::path& path, const CurvePanel& panel) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    write_panel_csv(out, panel);
}

void write_curves_csv(std::ostream& out, const Grid& grid, const std::vector<Curve>& curves) {
    write_row(out, grid.points().transpose());
    for (const auto& c : curves) {
        require_same_grid(grid, c.grid);
        write_row(out, c.values.transpose());
    }
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) write_row(out, values.row(r));
}

Table read_table_csv(std::istream& in) {
    Table table;
    std::vector<double> flat;
    std::string line;
    std::size_t line_no = 0, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        if (table.header.empty()) {
            for (auto f : fields) {
                while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.remove_suffix(1);
                table.header.emplace_back(f);
            }
            continue;
        }
        if (fields.size() != table.header.size())
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(table.header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) flat.push_back(parse_double(fields[c], line_no, c + 1));
        ++rows;
    }
    if (table.header.empty()) fail(ErrorKind::Parse, "table file is empty");
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), static_cast<Eigen::Index>(rows), cols);
    if (!table.values.allFinite()) fail(ErrorKind::Parse, "table values must be finite");
    return table;
}

Table read_table_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    return read_table_csv(in);
}

}  // namespace curvedim
