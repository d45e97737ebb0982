#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"
#include "stakenli/ingest.hpp"
#include "stakenli/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stakenli::nli {

inline constexpr std::string_view entity_placeholder = "{e}";
inline constexpr std::string_view label_placeholder = "{S}";

/// Hypothesis pattern with exactly one {e} and one {S}.
class PromptTemplate {
public:
    PromptTemplate(std::string id, std::string pattern) : id_(std::move(id)), pattern_(std::move(pattern))
    {
        if (id_.empty()) throw input_error("template id must be non-empty");
        for (auto ph : {entity_placeholder, label_placeholder}) {
            const auto first = pattern_.find(ph);
            if (first == std::string::npos)
                throw input_error("template '" + id_ + "' lacks placeholder " + std::string(ph));
            if (pattern_.find(ph, first + 1) != std::string::npos)
                throw input_error("template '" + id_ + "' repeats placeholder " + std::string(ph));
        }
    }

    const std::string& id() const { return id_; }
    const std::string& pattern() const { return pattern_; }

    /// Single-pass substitution; placeholder-like text inside the arguments is left alone.
    std::string render(std::string_view entity, std::string_view label) const
    {
        if (entity.empty() || label.empty()) throw input_error("render_prompt needs a non-empty entity and label");
        std::string out;
        std::size_t pos = 0;
        while (pos < pattern_.size()) {
            if (pattern_.compare(pos, entity_placeholder.size(), entity_placeholder) == 0) {
                out += entity;
                pos += entity_placeholder.size();
            } else if (pattern_.compare(pos, label_placeholder.size(), label_placeholder) == 0) {
                out += label;
                pos += label_placeholder.size();
            } else {
                out += pattern_[pos++];
            }
        }
        return out;
    }

    friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;

private:
    std::string id_;
    std::string pattern_;
};

inline std::string render_prompt(const PromptTemplate& t, std::string_view entity, std::string_view label)
{
    return t.render(entity, label);
}

class TemplateRegistry {
public:
    TemplateRegistry() = default;
    explicit TemplateRegistry(std::vector<PromptTemplate> templates) : templates_(std::move(templates))
    {
        for (std::size_t i = 0; i < templates_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (templates_[i].id() == templates_[j].id())
                    throw input_error("duplicate template id '" + templates_[i].id() + "'");
    }

    /// The three shipped hypothesis templates.
    static TemplateRegistry builtin()
    {
        return TemplateRegistry({{"original", "The entity {e} belongs to the stakeholder group of {S}"},
                                 {"template1", "The entity {e} is {S}"},
                                 {"template2", "The entity {e} is of stakeholder type {S}"}});
    }

    const std::vector<PromptTemplate>& templates() const { return templates_; }

    const PromptTemplate& get(std::string_view id) const
    {
        for (const auto& t : templates_)
            if (t.id() == id) return t;
        std::string known;
        for (const auto& t : templates_) known += (known.empty() ? "" : ", ") + t.id();
        throw input_error("unknown template '" + std::string(id) + "' (known: " + known + ")");
    }

private:
    std::vector<PromptTemplate> templates_;
};

inline TemplateRegistry parse_templates(std::string_view content, const std::string& source)
{
    const json j = io::parse_document(content, source);
    if (!j.is_array()) throw input_error(source + ": template registry must be a JSON list of {id, pattern}");
    std::vector<PromptTemplate> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            if (!j[i].is_object()) throw input_error("expected an object");
            out.emplace_back(io::require_string(j[i], "id"), io::require_string(j[i], "pattern"));
        } catch (const Error& e) {
            throw input_error(source + ": [" + std::to_string(i) + "]: " + e.what());
        }
    }
    try {
        return TemplateRegistry(std::move(out));
    } catch (const Error& e) {
        throw input_error(source + ": " + e.what());
    }
}

inline TemplateRegistry load_templates(const std::filesystem::path& path)
{
    return parse_templates(io::read_file(path), path.string());
}

inline std::string serialize_templates(const TemplateRegistry& r)
{
    ordered_json arr = ordered_json::array();
    for (const auto& t : r.templates()) arr.push_back({{"id", t.id()}, {"pattern", t.pattern()}});
    return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// NLI instances
// ---------------------------------------------------------------------------

struct NLIInstance {
    std::string group_id;
    std::string premise;
    std::string hypothesis;
    int label = 0;  ///< 1 = entails, 0 = does not
    std::string entity_phrase;
    std::string stakeholder;
    std::string template_id;

    friend bool operator==(const NLIInstance&, const NLIInstance&) = default;
};

/// One instance per candidate; the gold label is the only positive.
inline std::vector<NLIInstance> to_nli(const LabeledExample& example, const std::vector<StakeholderLabel>& candidates,
                                       const PromptTemplate& tmpl, const std::string& group_id)
{
    const bool has_gold = std::any_of(candidates.begin(), candidates.end(),
                                      [&](const StakeholderLabel& l) { return l.name == example.label; });
    if (!has_gold)
        throw input_error("record '" + example.id + "': gold label '" + example.label +
                          "' is not a candidate for topic '" + example.topic + "'");
    if (example.description.rendered.empty()) throw input_error("record '" + example.id + "' has an empty premise");

    std::vector<NLIInstance> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates)
        out.push_back({group_id, example.description.rendered, tmpl.render(example.entity_phrase, c.name),
                       c.name == example.label ? 1 : 0, example.entity_phrase, c.name, tmpl.id()});
    return out;
}

/// Group id of the i-th input example: "g" plus a zero-padded index, so
/// lexicographic and input order agree.
inline std::string group_id_for(std::size_t index)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "g%06zu", index);
    return buf;
}

/// Concatenates to_nli over `examples` in input order, taking each example's
/// candidates from its topic.
inline std::vector<NLIInstance> compile_dataset(const std::vector<LabeledExample>& examples,
                                                const LabelRegistry& registry, const PromptTemplate& tmpl)
{
    std::vector<NLIInstance> out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto candidates = candidates_for_topic(registry, examples[i].topic);
        auto group = to_nli(examples[i], candidates, tmpl, group_id_for(i));
        out.insert(out.end(), std::make_move_iterator(group.begin()), std::make_move_iterator(group.end()));
    }
    return out;
}

inline ordered_json instance_to_json(const NLIInstance& x)
{
    return {{"group_id", x.group_id},           {"premise", x.premise},
            {"hypothesis", x.hypothesis},       {"label", x.label},
            {"entity_phrase", x.entity_phrase}, {"stakeholder", x.stakeholder},
            {"template_id", x.template_id}};
}

inline NLIInstance instance_from_json(const json& j)
{
    NLIInstance x;
    x.group_id = io::require_string(j, "group_id");
    x.premise = io::require_string(j, "premise");
    x.hypothesis = io::require_string(j, "hypothesis");
    const auto& label = io::require(j, "label");
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1))
        throw input_error("field 'label' must be 0 or 1");
    x.label = label.get<int>();
    x.entity_phrase = io::require_string(j, "entity_phrase");
    x.stakeholder = io::require_string(j, "stakeholder");
    x.template_id = io::require_string(j, "template_id");
    if (x.premise.empty() || x.hypothesis.empty()) throw input_error("premise and hypothesis must be non-empty");
    return x;
}

inline std::string serialize_nli(const std::vector<NLIInstance>& instances)
{
    return io::to_jsonl(instances, instance_to_json);
}

inline std::vector<NLIInstance> parse_nli(std::string_view content, const std::string& source)
{
    std::vector<NLIInstance> out;
    io::for_each_jsonl(content, source, [&](const json& j, std::size_t) { out.push_back(instance_from_json(j)); });
    return out;
}

inline void write_nli(const std::filesystem::path& path, const std::vector<NLIInstance>& instances)
{
    io::write_file_atomic(path, serialize_nli(instances));
}

inline std::vector<NLIInstance> read_nli(const std::filesystem::path& path)
{
    return parse_nli(io::read_file(path), path.string());
}

}  // namespace stakenli::nli
