#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tflr/composition.hpp"

namespace tflr::csv {

/// Shortest decimal that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// A parsed numeric table: header names and a dense matrix.
struct Table {
    std::vector<std::string> names;
    MatrixXd values;
};

/// Reads "header line, then numeric rows" with ',' as separator and '.' as
/// the decimal point. `source` is only used in error messages.
inline Table read_table(std::istream& in, const std::string& source) {
    std::string line;
    Table table;
    if (!std::getline(in, line)) throw Error(Errc::ParseError, source + ": missing header line");
    for (auto field : detail::split(line)) table.names.emplace_back(field);
    const std::size_t width = table.names.size();

    std::vector<double> flat;
    std::size_t n_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line);
        if (fields.size() != width) {
            throw Error(Errc::ParseError, source + ": row " + std::to_string(n_rows + 1) + " (line " +
                                              std::to_string(line_no) + ") has " + std::to_string(fields.size()) +
                                              " fields, header has " + std::to_string(width));
        }
        for (auto f : fields) {
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
                throw Error(Errc::ParseError, source + ": row " + std::to_string(n_rows + 1) + " (line " +
                                                  std::to_string(line_no) + ") has non-numeric field '" +
                                                  std::string(f) + "'");
            }
            flat.push_back(v);
        }
        ++n_rows;
    }
    table.values.resize(static_cast<Index>(n_rows), static_cast<Index>(width));
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t k = 0; k < width; ++k) table.values(i, k) = flat[i * width + k];
    }
    return table;
}

/// Reads and validates a composition table. Validation failures keep their
/// error code; the message gains the source name.
inline CompositionMatrix read_composition(std::istream& in, const std::string& source,
                                          double tol = kIngestTolerance) {
    Table t = read_table(in, source);
    if (t.values.rows() == 0) throw Error(Errc::EmptyMatrix, source + ": no data rows");
    try {
        return validate_composition(std::move(t.values), tol, std::move(t.names));
    } catch (const Error& e) {
        const std::string what = e.what();
        const auto colon = what.find(": ");
        throw Error(e.code(), source + ": " + (colon == std::string::npos ? what : what.substr(colon + 2)));
    }
}

inline CompositionMatrix read_composition_file(const std::string& path, double tol = kIngestTolerance) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, path + ": cannot open");
    return read_composition(in, path, tol);
}

inline void write_table(std::ostream& out, const std::vector<std::string>& names, const MatrixXd& values) {
    for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index k = 0; k < values.cols(); ++k) out << (k ? "," : "") << format_double(values(i, k));
        out << '\n';
    }
}

/// Names to use for a matrix without labels: prefix1, prefix2, ...
inline std::vector<std::string> default_names(const std::string& prefix, Index count) {
    std::vector<std::string> names;
    for (Index k = 0; k < count; ++k) names.push_back(prefix + std::to_string(k + 1));
    return names;
}

}  // namespace tflr::csv
