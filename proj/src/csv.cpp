#include "stratreg/error.hpp"
#include "stratreg/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace stratreg {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// One record; fields may be double-quoted with "" as an escaped quote.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(trim(field));
    return fields;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

bool parse_number(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

CsvIngest ingest_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                     const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::parse_error, "'" + path + "' is empty");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::vector<std::string> header = split_record(line);

    auto column_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw Error(ErrorCode::parse_error, "column '" + name + "' not found in '" + path + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t target =
        target_column.empty() ? header.size() - 1 : column_of(target_column);
    std::vector<std::size_t> columns;
    for (const std::string& name : feature_columns) columns.push_back(column_of(name));
    if (feature_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c != target) columns.push_back(c);
        }
    }
    columns.push_back(target);

    std::vector<std::vector<double>> rows;
    CsvIngest result;
    Index line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_record(line);
        std::vector<double> row;
        bool missing = false;
        for (const std::size_t c : columns) {
            if (c >= cells.size() || is_missing(cells[c])) {
                missing = true;
                break;
            }
            double value = 0.0;
            if (!parse_number(cells[c], value)) {
                throw Error(ErrorCode::parse_error,
                            "non-numeric cell '" + cells[c] + "' in column '" + header[c] +
                                "' at line " + std::to_string(line_number));
            }
            row.push_back(value);
        }
        if (missing) {
            ++result.dropped_rows;
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::parse_error, "no complete rows in '" + path + "'");

    const Index n = static_cast<Index>(rows.size());
    const Index d = static_cast<Index>(columns.size()) - 1;
    Eigen::MatrixXd raw(n, d);
    Eigen::VectorXd response(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < d; ++j) raw(i, j) = row[static_cast<std::size_t>(j)];
        response[i] = row.back();
    }
    result.dataset = make_dataset(with_intercept(raw), min_max_normalize(response), {});
    return result;
}

}  // namespace stratreg
