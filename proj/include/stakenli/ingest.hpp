#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/log.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace stakenli {

struct Corpus {
    std::vector<Document> documents;
    std::optional<std::string> topic;

    const Document* find(std::string_view id) const
    {
        for (const auto& d : documents)
            if (d.id == id) return &d;
        return nullptr;
    }
};

struct LabeledExample {
    std::string id;  ///< defaults to the entity phrase
    std::string entity_phrase;
    EntityDescription description;
    std::string label;
    std::string topic;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct DatasetSplits {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> dev;
    std::vector<LabeledExample> test_seen;
    std::vector<LabeledExample> test_unseen;
};

namespace ingest {

inline bool is_iso_date(std::string_view s)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline Document document_from_json(const json& j)
{
    Document d{io::require_string(j, "id"),    io::require_string(j, "topic"), io::require_string(j, "title"),
               io::require_string(j, "text"),  io::require_string(j, "source"), io::optional_string(j, "date")};
    if (d.id.empty()) throw input_error("document id must be non-empty");
    if (d.text.empty()) throw input_error("document '" + d.id + "' has empty text");
    if (d.date && !is_iso_date(*d.date))
        throw input_error("document '" + d.id + "' date '" + *d.date + "' is not YYYY-MM-DD");
    return d;
}

inline ordered_json document_to_json(const Document& d)
{
    ordered_json j{{"id", d.id}, {"topic", d.topic}, {"title", d.title}, {"text", d.text}, {"source", d.source}};
    if (d.date) j["date"] = *d.date;
    return j;
}

inline Corpus parse_corpus(std::string_view content, const std::string& source)
{
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> first_line;
    io::for_each_jsonl(content, source, [&](const json& record, std::size_t line) {
        Document d = document_from_json(record);
        auto [it, inserted] = first_line.emplace(d.id, line);
        if (!inserted)
            throw input_error("duplicate document id '" + d.id + "' (first seen on line " +
                              std::to_string(it->second) + ")");
        corpus.documents.push_back(std::move(d));
    });
    if (corpus.documents.empty()) log::warn(source + ": corpus is empty");
    return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path)
{
    return parse_corpus(io::read_file(path), path.string());
}

inline std::string serialize_corpus(const Corpus& corpus)
{
    return io::to_jsonl(corpus.documents, document_to_json);
}

/// Keeps documents whose lowercased text contains at least `min_hits`
/// distinct keywords (bag-of-words topic filter).
inline Corpus filter_by_topic(const Corpus& corpus, const std::vector<std::string>& include_keywords,
                              std::size_t min_hits)
{
    if (include_keywords.empty()) throw input_error("topic filter needs at least one keyword");
    if (min_hits == 0) throw input_error("min_hits must be positive");

    std::set<std::string> keywords;
    for (const auto& k : include_keywords) {
        std::string lk;
        for (char c : k) lk += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (!lk.empty()) keywords.insert(std::move(lk));
    }
    if (keywords.empty()) throw input_error("topic filter keywords are all empty");

    Corpus out;
    out.topic = corpus.topic;
    for (const auto& d : corpus.documents) {
        std::string lower;
        lower.reserve(d.text.size());
        for (char c : d.text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        std::size_t hits = 0;
        for (const auto& k : keywords)
            if (lower.find(k) != std::string::npos) ++hits;
        if (hits >= min_hits) out.documents.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labeled examples
// ---------------------------------------------------------------------------

inline LabeledExample labeled_from_json(const json& j)
{
    LabeledExample ex;
    ex.entity_phrase = io::require_string(j, "entity_phrase");
    if (ex.entity_phrase.empty()) throw input_error("entity_phrase must be non-empty");
    ex.id = io::optional_string(j, "id").value_or(ex.entity_phrase);
    ex.topic = io::require_string(j, "topic");
    ex.label = io::require_string(j, "label");
    ex.description = description_from_json(io::require(j, "description"), ex.entity_phrase);
    return ex;
}

inline ordered_json labeled_to_json(const LabeledExample& ex)
{
    ordered_json j;
    if (ex.id != ex.entity_phrase) j["id"] = ex.id;
    j["entity_phrase"] = ex.entity_phrase;
    j["topic"] = ex.topic;
    j["description"] = description_to_json(ex.description);
    j["label"] = ex.label;
    return j;
}

/// Parses labeled records, rejecting labels the registry does not define.
inline std::vector<LabeledExample> parse_labeled(std::string_view content, const std::string& source,
                                                 const LabelRegistry& registry)
{
    std::vector<LabeledExample> out;
    std::unordered_set<std::string> ids;
    io::for_each_jsonl(content, source, [&](const json& record, std::size_t) {
        LabeledExample ex = labeled_from_json(record);
        if (!registry.contains(ex.label))
            throw input_error("record '" + ex.id + "': unknown label '" + ex.label + "'");
        if (!ids.insert(ex.id).second) throw input_error("duplicate record id '" + ex.id + "'");
        out.push_back(std::move(ex));
    });
    return out;
}

inline std::vector<LabeledExample> load_labeled(const std::filesystem::path& path, const LabelRegistry& registry)
{
    return parse_labeled(io::read_file(path), path.string(), registry);
}

inline std::string serialize_labeled(const std::vector<LabeledExample>& examples)
{
    return io::to_jsonl(examples, labeled_to_json);
}

struct TopicStats {
    std::size_t labels = 0;
    std::size_t instances = 0;

    friend bool operator==(const TopicStats&, const TopicStats&) = default;
};

/// Distinct label count and instance count per topic.
inline std::map<std::string, TopicStats> topic_stats(const std::vector<LabeledExample>& examples)
{
    std::map<std::string, std::set<std::string>> labels;
    std::map<std::string, TopicStats> out;
    for (const auto& ex : examples) {
        labels[ex.topic].insert(ex.label);
        ++out[ex.topic].instances;
    }
    for (auto& [topic, st] : out) st.labels = labels[topic].size();
    return out;
}

inline std::set<std::string> label_set(const std::vector<LabeledExample>& examples)
{
    std::set<std::string> out;
    for (const auto& ex : examples) out.insert(ex.label);
    return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Checks the seen/unseen contract: test_seen labels are a subset of train
/// labels, test_unseen labels are disjoint from them, and no record id
/// appears in two splits.
inline void validate_splits(const DatasetSplits& s)
{
    const auto train = label_set(s.train);
    for (const auto& l : label_set(s.test_seen))
        if (!train.count(l)) throw input_error("test_seen label '" + l + "' is absent from train");
    for (const auto& l : label_set(s.test_unseen))
        if (train.count(l)) throw input_error("test_unseen label '" + l + "' also occurs in train");
    std::unordered_set<std::string> ids;
    for (const auto* part : {&s.train, &s.dev, &s.test_seen, &s.test_unseen})
        for (const auto& ex : *part)
            if (!ids.insert(ex.id).second) throw input_error("record '" + ex.id + "' appears in two splits");
}

namespace detail {
// Fisher-Yates with a fixed engine so the permutation is identical across
// standard library implementations.
inline void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}
}  // namespace detail

/// Routes every example with an unseen label to test_unseen, then splits the
/// rest per label into train / dev / test_seen. Each seen label keeps at
/// least one train example, and gets a dev example whenever it has two or
/// more. Each split preserves input order.
inline DatasetSplits make_splits(const std::vector<LabeledExample>& examples,
                                 const std::set<std::string>& unseen_labels, double dev_fraction,
                                 std::uint64_t seed, double test_fraction = -1.0)
{
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw input_error("dev_fraction must be in (0,1)");
    if (test_fraction < 0.0) test_fraction = dev_fraction;
    if (!(test_fraction >= 0.0 && dev_fraction + test_fraction < 1.0))
        throw input_error("dev_fraction + test_fraction must be below 1");

    const auto all = label_set(examples);
    for (const auto& l : unseen_labels)
        if (!all.count(l)) throw input_error("unseen label '" + l + "' does not occur in the examples");
    if (!all.empty() && unseen_labels.size() == all.size())
        throw input_error("unseen labels cover every label; train split would be empty");

    enum Part { train, dev, test_seen, test_unseen };
    std::vector<Part> assignment(examples.size(), train);
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (unseen_labels.count(examples[i].label))
            assignment[i] = test_unseen;
        else
            by_label[examples[i].label].push_back(i);
    }

    std::mt19937_64 rng(seed);
    for (auto& [label, idx] : by_label) {
        detail::shuffle(idx, rng);
        const std::size_t n = idx.size();
        std::size_t n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * dev_fraction));
        std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
        if (n >= 2) n_dev = std::max<std::size_t>(n_dev, 1);
        n_dev = std::min(n_dev, n - 1);
        n_test = std::min(n_test, n - 1 - n_dev);
        for (std::size_t k = 0; k < n_dev; ++k) assignment[idx[k]] = dev;
        for (std::size_t k = n_dev; k < n_dev + n_test; ++k) assignment[idx[k]] = test_seen;
    }

    DatasetSplits s;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        switch (assignment[i]) {
        case train: s.train.push_back(examples[i]); break;
        case dev: s.dev.push_back(examples[i]); break;
        case test_seen: s.test_seen.push_back(examples[i]); break;
        case test_unseen: s.test_unseen.push_back(examples[i]); break;
        }
    }
    validate_splits(s);
    return s;
}

}  // namespace ingest
}  // namespace stakenli
