#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include <json.hpp>

#include "samod/types.hpp"

namespace samod::detail {

inline std::size_t line_of(const std::string& text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline nlohmann::json parse_json(std::istream& in)
{
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError("JSON syntax error at line " + std::to_string(line) + ": " + e.what(), line);
    }
}

inline std::string join_field(const std::string& where, const char* key)
{
    return where.empty() ? std::string(key) : where + "." + key;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where)
{
    if (!obj.is_object() || !obj.contains(key)) {
        const std::string field = join_field(where, key);
        throw ParseError("missing field \"" + field + "\"", 0, field);
    }
    return obj.at(key);
}

inline double number(const nlohmann::json& obj, const char* key, const std::string& where)
{
    const nlohmann::json& v = require(obj, key, where);
    if (!v.is_number()) {
        const std::string field = join_field(where, key);
        throw ParseError("field \"" + field + "\" must be a number", 0, field);
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        const std::string field = join_field(where, key);
        throw ParseError("field \"" + field + "\" must be finite", 0, field);
    }
    return x;
}

inline double number_or(const nlohmann::json& obj, const char* key, const std::string& where, double fallback)
{
    return obj.contains(key) ? number(obj, key, where) : fallback;
}

}  // namespace samod::detail
