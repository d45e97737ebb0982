#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/similarity.hpp"
#include "stakenli/text.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace stakenli::knowledge {

struct PageRef {
    std::string title;
    std::string url;
    std::string summary;

    friend bool operator==(const PageRef&, const PageRef&) = default;
};

inline ordered_json page_to_json(const PageRef& p)
{
    return {{"title", p.title}, {"url", p.url}, {"summary", p.summary}};
}

inline PageRef page_from_json(const json& j)
{
    PageRef p{io::require_string(j, "title"), io::require_string(j, "url"), io::require_string(j, "summary")};
    if (p.summary.empty()) throw input_error("page '" + p.title + "' has an empty summary");
    return p;
}

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

struct CacheEntry {
    std::optional<PageRef> page;  ///< nullopt marks a cached negative result
    std::string fetched_at;
};

/// One JSON file per normalized phrase under a directory. Entries are written
/// through a temporary file and renamed, so concurrent writers of the same
/// key leave one complete file behind.
class KnowledgeCache {
public:
    explicit KnowledgeCache(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw input_error("cannot create cache directory '" + dir_.string() + "': " + ec.message());
    }

    const std::filesystem::path& directory() const { return dir_; }

    /// File name for a key: [a-z0-9] kept, space as '_', everything else %XX.
    static std::string file_name(std::string_view key)
    {
        static constexpr char hex[] = "0123456789ABCDEF";
        std::string out;
        for (unsigned char c : key) {
            if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
                out += static_cast<char>(c);
            } else if (c == ' ') {
                out += '_';
            } else {
                out += '%';
                out += hex[c >> 4];
                out += hex[c & 0xF];
            }
        }
        return out + ".json";
    }

    std::optional<CacheEntry> get(std::string_view key) const
    {
        if (key.empty()) return std::nullopt;
        std::lock_guard lock(mutex_);
        const auto path = dir_ / file_name(key);
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) return std::nullopt;
        const json j = io::parse_document(io::read_file(path), path.string());
        CacheEntry e;
        e.fetched_at = j.value("fetched_at", "");
        if (j.value("found", false)) e.page = page_from_json(io::require(j, "page"));
        return e;
    }

    void put(std::string_view key, const std::optional<PageRef>& page)
    {
        if (key.empty()) return;
        ordered_json j{{"key", key}, {"found", page.has_value()}};
        if (page) j["page"] = page_to_json(*page);
        j["fetched_at"] = utc_timestamp();
        std::lock_guard lock(mutex_);
        io::write_file_atomic(dir_ / file_name(key), j.dump(2) + "\n");
    }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Overrides
// ---------------------------------------------------------------------------

/// Manual phrase -> page title links, keyed by normalized phrase.
class OverrideRegistry {
public:
    OverrideRegistry() = default;

    void add(std::string_view phrase, std::string title)
    {
        links_[similarity::normalize_mention(phrase)] = std::move(title);
    }

    std::optional<std::string> find(std::string_view phrase) const
    {
        auto it = links_.find(similarity::normalize_mention(phrase));
        if (it == links_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return links_.size(); }

private:
    std::map<std::string, std::string> links_;
};

inline OverrideRegistry parse_overrides(std::string_view content, const std::string& source)
{
    const json j = io::parse_document(content, source);
    if (!j.is_object()) throw input_error(source + ": overrides must be a JSON object {phrase: title}");
    OverrideRegistry out;
    for (const auto& [phrase, title] : j.items()) {
        if (!title.is_string() || title.get<std::string>().empty())
            throw input_error(source + ": override for '" + phrase + "' must be a non-empty title");
        out.add(phrase, title.get<std::string>());
    }
    return out;
}

inline OverrideRegistry load_overrides(const std::filesystem::path& path)
{
    return parse_overrides(io::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Remote source
// ---------------------------------------------------------------------------

/// Remote encyclopedia access. Implementations throw transport errors on
/// network failure and return nullopt for genuine misses.
class PageSource {
public:
    virtual ~PageSource() = default;
    virtual std::string name() const = 0;
    /// Title of the top search hit.
    virtual std::optional<std::string> search(std::string_view query) = 0;
    virtual std::optional<PageRef> summary(std::string_view title) = 0;
};

/// MediaWiki-style REST endpoints under one base URL:
///   GET {base}/w/rest.php/v1/search/page?q=...&limit=1
///   GET {base}/api/rest_v1/page/summary/{title}
class RestPageSource final : public PageSource {
public:
    explicit RestPageSource(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(10))
        : timeout_(timeout)
    {
        const auto scheme_end = base_url.find("://");
        if (scheme_end == std::string::npos) throw input_error("knowledge base URL needs a scheme: " + base_url);
        const auto path_start = base_url.find('/', scheme_end + 3);
        host_ = base_url.substr(0, path_start);
        if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }

    std::string name() const override { return "rest:" + host_ + prefix_; }

    std::size_t request_count() const { return requests_.load(); }

    std::optional<std::string> search(std::string_view query) override
    {
        const auto body = get(prefix_ + "/w/rest.php/v1/search/page",
                              httplib::Params{{"q", std::string(query)}, {"limit", "1"}});
        if (!body) return std::nullopt;
        const json j = parse(*body);
        if (!j.contains("pages") || !j["pages"].is_array()) throw protocol_error(name(), "search reply lacks 'pages'");
        if (j["pages"].empty()) return std::nullopt;
        return io::require_string(j["pages"][0], "title");
    }

    std::optional<PageRef> summary(std::string_view title) override
    {
        const auto body = get(prefix_ + "/api/rest_v1/page/summary/" + encode_title(title), {});
        if (!body) return std::nullopt;
        const json j = parse(*body);
        PageRef p;
        p.title = j.value("title", std::string(title));
        p.summary = j.value("extract", "");
        if (j.contains("content_urls") && j["content_urls"].contains("desktop"))
            p.url = j["content_urls"]["desktop"].value("page", "");
        if (p.summary.empty()) return std::nullopt;
        return p;
    }

    static std::string encode_title(std::string_view title)
    {
        static constexpr char hex[] = "0123456789ABCDEF";
        std::string out;
        for (unsigned char c : title) {
            if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '(' || c == ')' || c == ',') {
                out += static_cast<char>(c);
            } else if (c == ' ') {
                out += '_';
            } else {
                out += '%';
                out += hex[c >> 4];
                out += hex[c & 0xF];
            }
        }
        return out;
    }

private:
    std::optional<std::string> get(const std::string& path, const httplib::Params& params)
    {
        ++requests_;
        httplib::Client cli(host_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_follow_location(true);
        auto res = cli.Get(path, params, httplib::Headers{{"Accept", "application/json"}});
        if (!res) throw transport_error(name(), "request to " + path + " failed: " + httplib::to_string(res.error()));
        if (res->status == 404) return std::nullopt;
        if (res->status >= 500) throw transport_error(name(), "HTTP " + std::to_string(res->status) + " from " + path);
        if (res->status != 200) throw protocol_error(name(), "HTTP " + std::to_string(res->status) + " from " + path);
        return res->body;
    }

    json parse(const std::string& body) const
    {
        try {
            return json::parse(body);
        } catch (const json::parse_error&) {
            throw protocol_error(name(), "reply is not JSON");
        }
    }

    std::string host_;
    std::string prefix_;
    std::chrono::milliseconds timeout_;
    std::atomic<std::size_t> requests_{0};
};

// ---------------------------------------------------------------------------
// Lookup
// ---------------------------------------------------------------------------

/// Resolves `phrase` to a page: an override link first, then the cache, then
/// (only when `online`) a remote search taking the top hit. Remote outcomes,
/// including misses, are cached. An offline miss returns nullopt.
inline std::optional<PageRef> lookup_page(std::string_view phrase, KnowledgeCache& cache,
                                          const OverrideRegistry& overrides, bool online,
                                          PageSource* remote = nullptr)
{
    if (online && remote == nullptr) throw input_error("online knowledge lookup needs a page source");
    const std::string key = similarity::normalize_mention(phrase);
    if (key.empty()) return std::nullopt;

    if (auto title = overrides.find(phrase)) {
        const std::string title_key = similarity::normalize_mention(*title);
        if (auto hit = cache.get(title_key); hit && hit->page) return hit->page;
        if (!online) return std::nullopt;
        auto page = remote->summary(*title);
        cache.put(title_key, page);
        return page;
    }

    if (auto hit = cache.get(key)) return hit->page;
    if (!online) return std::nullopt;

    std::optional<PageRef> page;
    if (auto title = remote->search(phrase)) page = remote->summary(*title);
    cache.put(key, page);
    return page;
}

/// The first `n` sentences of the page summary, sliced verbatim.
inline std::string intro_sentences(const PageRef& page, std::size_t n)
{
    if (n == 0) throw input_error("intro_sentences needs n >= 1");
    const auto sentences = text::split_sentences(page.summary);
    if (sentences.empty()) return {};
    const auto& last = sentences[std::min(n, sentences.size()) - 1];
    const auto begin = sentences.front().span.begin;
    return text::detail::trim(std::string_view(page.summary).substr(begin, last.span.end - begin));
}

}  // namespace stakenli::knowledge
