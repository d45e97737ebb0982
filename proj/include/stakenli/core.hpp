#pragma once

#include "stakenli/error.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/log.hpp"

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace stakenli {

// ---------------------------------------------------------------------------
// Stakeholder labels
// ---------------------------------------------------------------------------

/// One stakeholder class. A common label (topic_specific == false) applies to
/// every topic the registry knows; its `topics` list is informational only.
struct StakeholderLabel {
    std::string name;
    bool topic_specific = false;
    std::vector<std::string> topics;

    bool applies_to(std::string_view topic) const
    {
        return !topic_specific || std::find(topics.begin(), topics.end(), topic) != topics.end();
    }

    friend bool operator==(const StakeholderLabel&, const StakeholderLabel&) = default;
};

/// The label set S, partitioned per news topic. Immutable after construction.
class LabelRegistry {
public:
    LabelRegistry() = default;

    /// Validates names, uniqueness, and the topic-specific/topics rule.
    explicit LabelRegistry(std::vector<StakeholderLabel> labels) : labels_(std::move(labels))
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            const auto& l = labels_[i];
            const std::string where = "labels[" + std::to_string(i) + "]";
            if (l.name.empty()) throw input_error(where + ".name: must be non-empty");
            if (!seen.insert(l.name).second)
                throw input_error(where + ".name: duplicate label '" + l.name + "'");
            if (l.topic_specific && l.topics.empty())
                throw input_error(where + ".topics: topic-specific label '" + l.name +
                                  "' needs at least one topic");
            for (const auto& t : l.topics) {
                if (t.empty()) throw input_error(where + ".topics: empty topic name");
                if (std::find(topics_.begin(), topics_.end(), t) == topics_.end())
                    topics_.push_back(t);
            }
        }
    }

    const std::vector<StakeholderLabel>& labels() const { return labels_; }

    /// Known topics in order of first appearance.
    const std::vector<std::string>& topics() const { return topics_; }

    bool has_topic(std::string_view topic) const
    {
        return std::find(topics_.begin(), topics_.end(), topic) != topics_.end();
    }

    const StakeholderLabel* find(std::string_view name) const
    {
        auto it = std::find_if(labels_.begin(), labels_.end(),
                               [&](const StakeholderLabel& l) { return l.name == name; });
        return it == labels_.end() ? nullptr : &*it;
    }

    bool contains(std::string_view name) const { return find(name) != nullptr; }

private:
    std::vector<StakeholderLabel> labels_;
    std::vector<std::string> topics_;
};

/// Common labels plus the topic's own labels, in registry order.
inline std::vector<StakeholderLabel> candidates_for_topic(const LabelRegistry& registry,
                                                          std::string_view topic)
{
    if (!registry.has_topic(topic)) {
        std::string known;
        for (const auto& t : registry.topics()) known += (known.empty() ? "" : ", ") + t;
        throw input_error("unknown topic '" + std::string(topic) + "' (known topics: " + known + ")");
    }
    std::vector<StakeholderLabel> out;
    for (const auto& l : registry.labels())
        if (l.applies_to(topic)) out.push_back(l);
    return out;
}

inline LabelRegistry parse_label_registry(std::string_view text, const std::string& source)
{
    const json doc = io::parse_document(text, source);
    if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array())
        throw input_error(source + ": expected an object with a \"labels\" array");

    std::vector<StakeholderLabel> labels;
    const auto& arr = doc["labels"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = source + ": labels[" + std::to_string(i) + "]";
        const auto& item = arr[i];
        if (!item.is_object()) throw input_error(where + ": expected an object");
        StakeholderLabel label;
        try {
            label.name = io::require_string(item, "name");
            const auto& ts = io::require(item, "topic_specific");
            if (!ts.is_boolean()) throw input_error("field 'topic_specific' must be a boolean");
            label.topic_specific = ts.get<bool>();
            const auto& topics = io::require(item, "topics");
            if (!topics.is_array()) throw input_error("field 'topics' must be an array");
            for (const auto& t : topics) {
                if (!t.is_string()) throw input_error("field 'topics' must hold strings");
                label.topics.push_back(t.get<std::string>());
            }
        } catch (const Error& e) {
            throw input_error(where + ": " + e.what());
        }
        labels.push_back(std::move(label));
    }
    try {
        return LabelRegistry(std::move(labels));
    } catch (const Error& e) {
        throw input_error(source + ": " + e.what());
    }
}

inline LabelRegistry load_label_registry(const std::filesystem::path& path)
{
    return parse_label_registry(io::read_file(path), path.string());
}

/// Canonical rendering: two-space indented JSON, keys sorted, trailing newline.
inline std::string serialize_label_registry(const LabelRegistry& registry)
{
    json labels = json::array();
    for (const auto& l : registry.labels())
        labels.push_back({{"name", l.name}, {"topic_specific", l.topic_specific}, {"topics", l.topics}});
    return json{{"labels", labels}}.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Documents, mentions, descriptions
// ---------------------------------------------------------------------------

struct Document {
    std::string id;
    std::string topic;
    std::string title;
    std::string text;
    std::string source;
    std::optional<std::string> date;  ///< ISO-8601 calendar date, YYYY-MM-DD

    friend bool operator==(const Document&, const Document&) = default;
};

enum class EntityKind { person, geopolitical, organization, other };

inline std::string_view to_string(EntityKind k)
{
    switch (k) {
    case EntityKind::person: return "Person";
    case EntityKind::geopolitical: return "GeopoliticalEntity";
    case EntityKind::organization: return "Organization";
    case EntityKind::other: return "Other";
    }
    return "Other";
}

/// Accepts the canonical names plus the common short tags (PERSON, GPE, ORG).
inline std::optional<EntityKind> parse_entity_kind(std::string_view s)
{
    if (s == "Person" || s == "PERSON" || s == "PER") return EntityKind::person;
    if (s == "GeopoliticalEntity" || s == "GPE") return EntityKind::geopolitical;
    if (s == "Organization" || s == "ORG") return EntityKind::organization;
    if (s == "Other") return EntityKind::other;
    return std::nullopt;
}

/// Half-open byte interval [begin, end).
struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(std::size_t offset) const { return begin <= offset && offset < end; }

    friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct EntityMention {
    std::string surface;
    EntityKind kind = EntityKind::other;
    std::string doc_id;
    ByteSpan span;
    std::size_t sentence_index = 0;

    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// Throws unless the mention's span lies inside `doc` and slices to its surface.
inline void validate_mention(const EntityMention& m, const Document& doc)
{
    if (m.doc_id != doc.id)
        throw input_error("mention '" + m.surface + "' belongs to '" + m.doc_id + "', not '" + doc.id + "'");
    if (m.span.begin > m.span.end || m.span.end > doc.text.size())
        throw input_error("mention '" + m.surface + "' span out of bounds in '" + doc.id + "'");
    if (doc.text.compare(m.span.begin, m.span.size(), m.surface) != 0)
        throw input_error("mention '" + m.surface + "' does not match the text at its span in '" + doc.id + "'");
}

struct Snippet {
    std::string doc_id;
    std::size_t sentence_index = 0;
    std::string text;

    friend bool operator==(const Snippet&, const Snippet&) = default;
};

/// Background w followed by context snippets M; `rendered` is w ⊕ M.
struct EntityDescription {
    std::string entity_name;
    std::optional<std::string> background;
    std::vector<Snippet> snippets;
    std::string rendered;

    friend bool operator==(const EntityDescription&, const EntityDescription&) = default;
};

/// Single-space concatenation, background first.
inline std::string render_description(const std::optional<std::string>& background,
                                      const std::vector<Snippet>& snippets)
{
    std::string out;
    if (background && !background->empty()) out = *background;
    for (const auto& s : snippets) {
        if (!out.empty()) out += ' ';
        out += s.text;
    }
    return out;
}

inline EntityDescription make_description(std::string entity_name, std::optional<std::string> background,
                                          std::vector<Snippet> snippets)
{
    if (snippets.empty()) throw input_error("description of '" + entity_name + "' has no snippets");
    if (background && background->empty()) background.reset();
    EntityDescription d{std::move(entity_name), std::move(background), std::move(snippets), {}};
    d.rendered = render_description(d.background, d.snippets);
    return d;
}

inline ordered_json description_to_json(const EntityDescription& d)
{
    ordered_json snippets = ordered_json::array();
    for (const auto& s : d.snippets)
        snippets.push_back({{"doc_id", s.doc_id}, {"sentence_index", s.sentence_index}, {"text", s.text}});
    ordered_json out;
    if (d.background) out["background"] = *d.background;
    out["snippets"] = std::move(snippets);
    out["rendered"] = d.rendered;
    return out;
}

/// Reads {"background"?, "snippets":[...]}; `rendered` is recomputed, never trusted.
inline EntityDescription description_from_json(const json& j, std::string entity_name)
{
    if (!j.is_object()) throw input_error("field 'description' must be an object");
    std::vector<Snippet> snippets;
    const auto& arr = io::require(j, "snippets");
    if (!arr.is_array()) throw input_error("field 'snippets' must be an array");
    for (const auto& s : arr) {
        if (!s.is_object()) throw input_error("snippet must be an object");
        snippets.push_back({io::require_string(s, "doc_id"), io::require_index(s, "sentence_index"),
                            io::require_string(s, "text")});
    }
    return make_description(std::move(entity_name), io::optional_string(j, "background"), std::move(snippets));
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
    std::size_t saliency_min_mentions = 2;
    double jw_threshold = 0.85;
    double jw_prefix_scale = 0.1;
    std::size_t max_premise_chars = 2000;
    std::size_t background_sentences = 3;
    std::string template_id = "original";

    /// Throws on out-of-range values; warns when the Jaro-Winkler threshold
    /// leaves the empirically useful 0.8-0.9 band.
    void validate() const
    {
        if (saliency_min_mentions == 0) throw input_error("saliency_min_mentions must be positive");
        if (!(jw_threshold >= 0.0 && jw_threshold <= 1.0)) throw input_error("jw_threshold must be in [0,1]");
        if (!(jw_prefix_scale >= 0.0 && jw_prefix_scale <= 0.25))
            throw input_error("jw_prefix_scale must be in [0,0.25]");
        if (max_premise_chars == 0) throw input_error("max_premise_chars must be positive");
        if (background_sentences == 0) throw input_error("background_sentences must be positive");
        if (template_id.empty()) throw input_error("template_id must be non-empty");
        if (jw_threshold < 0.8 || jw_threshold > 0.9)
            log::warn("jw_threshold " + std::to_string(jw_threshold) + " is outside the recommended [0.8, 0.9] range");
    }

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline json config_to_json(const PipelineConfig& c)
{
    return {{"saliency_min_mentions", c.saliency_min_mentions}, {"jw_threshold", c.jw_threshold},
            {"jw_prefix_scale", c.jw_prefix_scale},             {"max_premise_chars", c.max_premise_chars},
            {"background_sentences", c.background_sentences},   {"template_id", c.template_id}};
}

/// Applies the keys present in `overrides` on top of `base`, then validates.
inline PipelineConfig config_from_json(const json& overrides, PipelineConfig base = {})
{
    if (!overrides.is_object()) throw input_error("config must be a JSON object");
    auto positive = [&](const char* key, std::size_t& field) {
        if (!overrides.contains(key)) return;
        const auto& v = overrides[key];
        if (!v.is_number_integer() || v.get<long long>() <= 0)
            throw input_error(std::string("config field '") + key + "' must be a positive integer");
        field = v.get<std::size_t>();
    };
    auto real = [&](const char* key, double& field) {
        if (!overrides.contains(key)) return;
        if (!overrides[key].is_number()) throw input_error(std::string("config field '") + key + "' must be a number");
        field = overrides[key].get<double>();
    };
    for (const auto& [key, _] : overrides.items()) {
        static const std::set<std::string> known{"saliency_min_mentions", "jw_threshold", "jw_prefix_scale",
                                                 "max_premise_chars", "background_sentences", "template_id"};
        if (!known.count(key)) throw input_error("unknown config field '" + key + "'");
    }
    positive("saliency_min_mentions", base.saliency_min_mentions);
    real("jw_threshold", base.jw_threshold);
    real("jw_prefix_scale", base.jw_prefix_scale);
    positive("max_premise_chars", base.max_premise_chars);
    positive("background_sentences", base.background_sentences);
    if (overrides.contains("template_id")) base.template_id = io::require_string(overrides, "template_id");
    base.validate();
    return base;
}

inline PipelineConfig load_config(const std::filesystem::path& path)
{
    return config_from_json(io::parse_document(io::read_file(path), path.string()));
}

}  // namespace stakenli
