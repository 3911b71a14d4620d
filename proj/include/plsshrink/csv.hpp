#pragma once

#include "plsshrink/linalg.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace plsshrink {

/// Problems with external data files (parse failures, missing columns, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(strip(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(strip(cur));
    return out;
}

inline bool parse_finite(const std::string& field, double& out) {
    const char* b = field.data();
    const char* e = b + field.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc{} && ptr == e && std::isfinite(out);
}

}  // namespace detail

struct Dataset {
    Matrix x;
    Vector y;
    std::vector<std::string> feature_names;
    std::string target_name;
};

/// Numeric CSV with a header row: comma delimiter, decimal point, UTF-8.
/// Full-line '#' comments are skipped. Every cell must parse as a finite
/// number; errors carry the file line and column they occurred at.
inline Dataset ingest_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::vector<std::string> header;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        header = detail::split_fields(line);
        break;
    }
    if (header.empty()) throw DataError("'" + path + "': missing header row");

    Index target = -1;
    for (size_t j = 0; j < header.size(); ++j)
        if (header[j] == target_column) target = static_cast<Index>(j);
    if (target < 0) {
        std::string cols;
        for (size_t j = 0; j < header.size(); ++j) cols += (j ? ", " : "") + header[j];
        throw DataError("'" + path + "': target column '" + target_column +
                        "' not found; available columns: " + cols);
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != header.size())
            throw DataError("'" + path + "' line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (size_t j = 0; j < fields.size(); ++j) {
            if (!detail::parse_finite(fields[j], row[j]))
                throw DataError("'" + path + "' line " + std::to_string(lineno) + ", column '" +
                                header[j] + "': cannot parse '" + fields[j] +
                                "' as a finite number");
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw DataError("'" + path + "': need at least 2 data rows, got " +
                        std::to_string(rows.size()));

    Dataset data;
    data.target_name = target_column;
    const Index n = static_cast<Index>(rows.size());
    const Index p = static_cast<Index>(header.size()) - 1;
    data.x = Matrix(n, p);
    data.y = Vector(n);
    for (size_t j = 0; j < header.size(); ++j)
        if (static_cast<Index>(j) != target) data.feature_names.push_back(header[j]);
    for (Index i = 0; i < n; ++i) {
        Index col = 0;
        for (size_t j = 0; j < header.size(); ++j) {
            if (static_cast<Index>(j) == target)
                data.y(i) = rows[static_cast<size_t>(i)][j];
            else
                data.x(i, col++) = rows[static_cast<size_t>(i)][j];
        }
    }
    return data;
}

/// Headerless numeric matrix, one CSV row per matrix row.
inline Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = detail::split_fields(line);
        std::vector<double> row(fields.size());
        for (size_t j = 0; j < fields.size(); ++j)
            if (!detail::parse_finite(fields[j], row[j]))
                throw DataError("'" + path + "' line " + std::to_string(lineno) + ", field " +
                                std::to_string(j + 1) + ": cannot parse '" + fields[j] + "'");
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("'" + path + "' line " + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path + "': empty matrix");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

/// Round-trip decimal formatting for machine outputs.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// 4 significant digits for human tables.
inline std::string format_sig(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

/// Report CSV: '#'-prefixed metadata lines, a header row, then full-precision
/// values.
inline void write_report_csv(const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& meta,
                             const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (const auto& [k, v] : meta) out << "# " << k << ": " << v << "\n";
    for (size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_full(row[j]);
        out << "\n";
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

/// Dataset CSV: plain header row plus full-precision values.
inline void write_matrix_csv(const std::string& path, const std::vector<std::string>& columns,
                             const Matrix& values) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    if (!columns.empty()) out << "\n";
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j)
            out << (j ? "," : "") << format_full(values(i, j));
        out << "\n";
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace plsshrink
