#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pglab/errors.hpp"

// Minimal CSV support: comma separator, RFC-4180 quoting for fields holding
// commas, quotes, or newlines. Our own writers never emit embedded newlines.

namespace pglab {

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = false;
    for (char ch : field)
        if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') needs_quotes = true;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += '"';
    return out;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    return out;
}

// One line, already stripped of its newline. Quoted fields may not span lines.
inline std::vector<std::string> csv_split(const std::string& line, std::size_t lineno = 0,
                                          const std::string& origin = "<csv>") {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"' && cur.empty()) {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (in_quotes)
        throw FormatError(origin + ":" + std::to_string(lineno) + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

inline double csv_number(const std::string& field, std::size_t lineno, const std::string& origin) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("trailing text");
        return v;
    } catch (const std::exception&) {
        throw FormatError(origin + ":" + std::to_string(lineno) + ": not a number: '" + field + "'");
    }
}

}  // namespace pglab
