#pragma once

#include <charconv>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "samod/types.hpp"

namespace samod::detail {

/// Minimal comma-separated table: a header row, then data rows. Blank lines
/// and lines starting with '#' are skipped. No quoting.
struct CsvTable {
    std::vector<std::string> header;
    struct Row {
        std::size_t line = 0;
        std::vector<std::string> cells;
    };
    std::vector<Row> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name)
                return c;
        throw ParseError("missing column \"" + std::string(name) + "\"", 1, std::string(name));
    }
};

inline std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_cells(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return cells;
}

inline CsvTable read_csv(std::istream& in)
{
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        auto cells = split_cells(t);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             lineno);
        table.rows.push_back({lineno, std::move(cells)});
    }
    if (!have_header)
        throw ParseError("empty table: missing header row", 1);
    return table;
}

inline double parse_double(const std::string& cell, std::size_t line, std::string_view field)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size())
        throw ParseError("line " + std::to_string(line) + ": field " + std::string(field) +
                             " is not a number: \"" + cell + "\"",
                         line, std::string(field));
    return v;
}

inline std::int64_t parse_int(const std::string& cell, std::size_t line, std::string_view field)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError("line " + std::to_string(line) + ": field " + std::string(field) +
                             " is not an integer: \"" + cell + "\"",
                         line, std::string(field));
    return v;
}

}  // namespace samod::detail
