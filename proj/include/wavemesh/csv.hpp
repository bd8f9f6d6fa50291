#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "wavemesh/errors.hpp"

namespace wavemesh {

/// Numeric table read from RFC-4180-style CSV: header row required, LF or
/// CRLF line endings, optional quoting. Every data cell must parse as a
/// finite number.
struct NumericCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // one vector per header entry

    std::size_t rows() const { return header.empty() ? 0 : columns[0].size(); }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw CsvError(1, "column '" + name + "' not found");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw CsvError(line_no, "unterminated quote");
    fields.push_back(field);
    return fields;
}

} // namespace detail

inline NumericCsv read_numeric_csv(std::istream& in) {
    NumericCsv table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && !have_header) throw CsvError(line_no, "empty header row");
        if (line.empty()) continue;  // tolerate a trailing blank line
        auto fields = detail::split_csv_line(line, line_no);
        if (!have_header) {
            table.header = fields;
            table.columns.assign(fields.size(), {});
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw CsvError(line_no, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[c], &used);
            } catch (const std::exception&) {
                throw CsvError(line_no, "non-numeric value '" + fields[c] + "'");
            }
            while (used < fields[c].size() && std::isspace(static_cast<unsigned char>(fields[c][used])))
                ++used;
            if (used != fields[c].size())
                throw CsvError(line_no, "non-numeric value '" + fields[c] + "'");
            if (!std::isfinite(v)) throw CsvError(line_no, "non-finite value '" + fields[c] + "'");
            table.columns[c].push_back(v);
        }
    }
    if (!have_header) throw CsvError(1, "missing header row");
    return table;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\n") != std::string::npos) {
            os << '"';
            for (char ch : c) {
                if (ch == '"') os << "\"\"";
                else os << ch;
            }
            os << '"';
        } else {
            os << c;
        }
    }
    os << '\n';
}

} // namespace wavemesh
