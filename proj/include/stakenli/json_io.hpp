#pragma once

#include "stakenli/error.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace stakenli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace io {

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw input_error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw input_error("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw input_error("cannot rename '" + tmp.string() + "': " + ec.message());
}

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

/// Parses a whole JSON document; syntax errors carry the source name and line:column.
inline json parse_document(std::string_view text, const std::string& source)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw input_error(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error");
    }
}

/// Calls `fn(record, line_number)` for every non-blank line of a line-delimited JSON file.
/// Exceptions from `fn` are rethrown with the line number prefixed.
inline void for_each_jsonl(std::string_view text, const std::string& source,
                           const std::function<void(const json&, std::size_t)>& fn)
{
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        const std::string where = source + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error&) {
            throw input_error(where + ": malformed JSON line");
        }
        if (!record.is_object()) throw input_error(where + ": expected a JSON object");
        try {
            fn(record, line_no);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::input) throw;
            throw input_error(where + ": " + e.what());
        } catch (const json::exception& e) {
            throw input_error(where + ": " + e.what());
        }
    }
}

inline const json& require(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) throw input_error(std::string("missing field '") + key + "'");
    return *it;
}

inline std::string require_string(const json& obj, const char* key)
{
    const auto& v = require(obj, key);
    if (!v.is_string()) throw input_error(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw input_error(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

inline std::size_t require_index(const json& obj, const char* key)
{
    const auto& v = require(obj, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw input_error(std::string("field '") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

/// Serializes records one per line, each line newline-terminated.
template <typename Range, typename ToJson>
std::string to_jsonl(const Range& records, ToJson&& to_json)
{
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

}  // namespace io
}  // namespace stakenli
