#pragma once

#include "stakenli/core.hpp"

#include <array>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stakenli::text {

struct Sentence {
    std::size_t index = 0;
    ByteSpan span;     ///< from this sentence's start to the next sentence's start
    std::string text;  ///< the span with surrounding whitespace trimmed

    friend bool operator==(const Sentence&, const Sentence&) = default;
};

namespace detail {
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
// Bytes >= 0x80 belong to multi-byte UTF-8 sequences and count as word characters.
inline bool is_word(char c)
{
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

// Compared case-sensitively against the token that ends at the period.
inline constexpr std::array<std::string_view, 12> abbreviations{
    "Mr", "Mrs", "Ms", "Dr", "Prof", "Shri", "Smt", "St", "Rs", "U.S", "U.K", "No"};

inline bool ends_with_abbreviation(std::string_view text, std::size_t period)
{
    std::size_t start = period;
    while (start > 0 && !is_space(text[start - 1]) && text[start - 1] != '(' && text[start - 1] != '"') --start;
    const auto token = text.substr(start, period - start);
    for (auto abbr : abbreviations)
        if (token == abbr) return true;
    return false;
}

inline std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}
}  // namespace detail

/// Rule-based splitter: a boundary follows '.', '?' or '!' when the next
/// characters are whitespace and an uppercase letter, unless the period closes
/// a stop-listed abbreviation (Mr., Dr., U.S., Rs., ...). Spans partition the
/// text; whitespace-only input yields no sentences.
inline std::vector<Sentence> split_sentences(std::string_view text)
{
    std::vector<Sentence> out;
    if (detail::trim(text).empty()) return out;

    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '?' && c != '!') continue;
        std::size_t j = i + 1;
        if (j >= text.size() || !detail::is_space(text[j])) continue;
        while (j < text.size() && detail::is_space(text[j])) ++j;
        if (j >= text.size() || !detail::is_upper(text[j])) continue;
        if (c == '.' && detail::ends_with_abbreviation(text, i)) continue;
        starts.push_back(i + 1);
    }

    for (std::size_t k = 0; k < starts.size(); ++k) {
        const std::size_t b = starts[k];
        const std::size_t e = k + 1 < starts.size() ? starts[k + 1] : text.size();
        out.push_back({k, {b, e}, detail::trim(text.substr(b, e - b))});
    }
    return out;
}

/// Index of the sentence whose span contains `offset` (the last one if past the end).
inline std::size_t sentence_of(const std::vector<Sentence>& sentences, std::size_t offset)
{
    for (const auto& s : sentences)
        if (s.span.contains(offset)) return s.index;
    return sentences.empty() ? 0 : sentences.back().index;
}

/// Lowercased maximal runs of word characters.
inline std::vector<std::string> word_tokens(std::string_view s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (detail::is_word(c)) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline bool word_boundary_before(std::string_view text, std::size_t pos)
{
    return pos == 0 || !detail::is_word(text[pos - 1]);
}

inline bool word_boundary_after(std::string_view text, std::size_t end)
{
    return end >= text.size() || !detail::is_word(text[end]);
}

}  // namespace stakenli::text
