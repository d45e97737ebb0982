#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

/// String kernels for matching entity mentions across documents. All measures
/// operate on bytes; callers normalize first.
namespace stakenli::similarity {

namespace detail {
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
inline char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

inline constexpr std::array<std::string_view, 6> honorifics{"mr", "mrs", "ms", "dr", "shri", "smt"};
}  // namespace detail

/// Lowercases, removes ASCII punctuation, collapses whitespace and strips any
/// run of leading honorifics ("Dr. Narendra  Modi " -> "narendra modi").
inline std::string normalize_mention(std::string_view s)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (detail::is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (!detail::is_punct(c)) {
            current += detail::lower(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));

    std::size_t first = 0;
    while (first < tokens.size() &&
           std::find(detail::honorifics.begin(), detail::honorifics.end(), tokens[first]) !=
               detail::honorifics.end())
        ++first;

    std::string out;
    for (std::size_t i = first; i < tokens.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

/// Jaro similarity with the standard match window floor(max(|a|,|b|)/2) - 1.
inline double jaro(std::string_view a, std::string_view b)
{
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;

    const std::size_t longest = std::max(a.size(), b.size());
    const std::size_t window = longest / 2 > 0 ? longest / 2 - 1 : 0;

    std::vector<char> a_matched(a.size(), 0), b_matched(b.size(), 0);
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        const std::size_t hi = std::min(i + window + 1, b.size());
        for (std::size_t j = lo; j < hi; ++j) {
            if (b_matched[j] || a[i] != b[j]) continue;
            a_matched[i] = b_matched[j] = 1;
            ++matches;
            break;
        }
    }
    if (matches == 0) return 0.0;

    // Half the number of matched characters that appear out of order.
    std::size_t out_of_order = 0;
    for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
        if (!a_matched[i]) continue;
        while (!b_matched[j]) ++j;
        if (a[i] != b[j]) ++out_of_order;
        ++j;
    }
    const double m = static_cast<double>(matches);
    const double t = static_cast<double>(out_of_order) / 2.0;
    return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) + (m - t) / m) / 3.0;
}

/// Length of the common prefix, capped at 4.
inline std::size_t common_prefix4(std::string_view a, std::string_view b)
{
    std::size_t n = 0;
    while (n < 4 && n < a.size() && n < b.size() && a[n] == b[n]) ++n;
    return n;
}

inline double jaro_winkler(std::string_view a, std::string_view b, double prefix_scale = 0.1)
{
    if (!(prefix_scale >= 0.0 && prefix_scale <= 0.25))
        throw input_error("jaro_winkler prefix_scale must be in [0, 0.25], got " + std::to_string(prefix_scale));
    const double j = jaro(a, b);
    return j + static_cast<double>(common_prefix4(a, b)) * prefix_scale * (1.0 - j);
}

/// Unit-cost edit distance (insert / delete / substitute), two-row table.
inline std::size_t levenshtein(std::string_view a, std::string_view b)
{
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline constexpr std::size_t min_substring_length = 3;

/// True when the shorter string (at least three bytes) occurs in the longer
/// one starting and ending on token boundaries.
inline bool substring_match(std::string_view a, std::string_view b)
{
    std::string_view shorter = a.size() <= b.size() ? a : b;
    std::string_view longer = a.size() <= b.size() ? b : a;
    if (shorter.size() < min_substring_length) return false;

    for (auto pos = longer.find(shorter); pos != std::string_view::npos; pos = longer.find(shorter, pos + 1)) {
        const bool left = pos == 0 || longer[pos - 1] == ' ';
        const std::size_t end = pos + shorter.size();
        const bool right = end == longer.size() || longer[end] == ' ';
        if (left && right) return true;
    }
    return false;
}

enum class MatchRule { exact, jaro_winkler, substring };

inline std::string_view to_string(MatchRule r)
{
    switch (r) {
    case MatchRule::exact: return "exact";
    case MatchRule::jaro_winkler: return "jaro_winkler";
    case MatchRule::substring: return "substring";
    }
    return "exact";
}

/// Outcome of comparing two mentions. When `matched` is false, `rule` is
/// jaro_winkler and `score` is the sub-threshold similarity.
struct MatchDecision {
    bool matched = false;
    MatchRule rule = MatchRule::jaro_winkler;
    double score = 0.0;
};

/// Disjunction exact -> Jaro-Winkler -> token-aligned substring over
/// normalized surfaces; `rule` names the first test that succeeded.
inline MatchDecision mention_match(std::string_view a, std::string_view b, const PipelineConfig& config)
{
    const std::string na = normalize_mention(a);
    const std::string nb = normalize_mention(b);
    MatchDecision d;
    d.score = jaro_winkler(na, nb, config.jw_prefix_scale);
    if (!na.empty() && na == nb) {
        d.matched = true;
        d.rule = MatchRule::exact;
    } else if (!na.empty() && !nb.empty() && d.score >= config.jw_threshold) {
        d.matched = true;
        d.rule = MatchRule::jaro_winkler;
    } else if (substring_match(na, nb)) {
        d.matched = true;
        d.rule = MatchRule::substring;
    }
    return d;
}

}  // namespace stakenli::similarity
