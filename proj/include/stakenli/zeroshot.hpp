#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/nli_transform.hpp"
#include "stakenli/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace stakenli::zeroshot {

struct PremiseHypothesis {
    std::string premise;
    std::string hypothesis;
};

/// Entailment backend. score_batch returns one probability in [0,1] per pair,
/// position-aligned, and must tolerate concurrent calls.
class EntailmentScorer {
public:
    virtual ~EntailmentScorer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<double> score_batch(std::span<const PremiseHypothesis> pairs) = 0;
};

inline constexpr std::array<std::string_view, 9> scaffold_words{"the", "entity", "belongs", "to", "stakeholder",
                                                                 "group", "of", "is", "type"};

/// Fraction of the hypothesis' content words (word tokens minus template
/// scaffold words) that also occur in the premise. 0 when no content remains.
inline double lexical_score(std::string_view premise, std::string_view hypothesis)
{
    std::set<std::string> content;
    for (auto& t : text::word_tokens(hypothesis))
        if (std::find(scaffold_words.begin(), scaffold_words.end(), t) == scaffold_words.end())
            content.insert(std::move(t));
    if (content.empty()) return 0.0;
    const auto premise_tokens = text::word_tokens(premise);
    const std::unordered_set<std::string> words(premise_tokens.begin(), premise_tokens.end());
    std::size_t hits = 0;
    for (const auto& t : content)
        if (words.count(t)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(content.size());
}

/// Deterministic word-overlap backend for offline runs and tests.
class LexicalScorer final : public EntailmentScorer {
public:
    std::string id() const override { return "lexical"; }

    std::vector<double> score_batch(std::span<const PremiseHypothesis> pairs) override
    {
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) out.push_back(lexical_score(p.premise, p.hypothesis));
        return out;
    }
};

struct ClassificationResult {
    std::string entity_phrase;
    std::vector<std::pair<std::string, double>> scores;  ///< candidate order
    std::vector<std::string> predicted;                  ///< one label in single-label mode
    bool multi_label = false;
    std::string template_id;

    double score_of(std::string_view label) const
    {
        for (const auto& [l, s] : scores)
            if (l == label) return s;
        throw input_error("no score for label '" + std::string(label) + "'");
    }
};

namespace detail {
inline std::vector<double> score_candidates(const EntityDescription& description,
                                            const std::vector<StakeholderLabel>& candidates,
                                            const nli::PromptTemplate& tmpl, EntailmentScorer& scorer)
{
    if (candidates.empty()) throw input_error("classification of '" + description.entity_name + "' has no candidates");
    std::vector<PremiseHypothesis> pairs;
    pairs.reserve(candidates.size());
    for (const auto& c : candidates) pairs.push_back({description.rendered, tmpl.render(description.entity_name, c.name)});

    std::vector<double> scores;
    try {
        scores = scorer.score_batch(pairs);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::transport || e.kind() == ErrorKind::protocol) throw;
        throw protocol_error(scorer.id(), e.what());
    } catch (const std::exception& e) {
        throw protocol_error(scorer.id(), e.what());
    }
    if (scores.size() != pairs.size())
        throw protocol_error(scorer.id(), "returned " + std::to_string(scores.size()) + " scores for " +
                                              std::to_string(pairs.size()) + " pairs");
    for (double s : scores)
        if (!(s >= 0.0 && s <= 1.0)) throw protocol_error(scorer.id(), "score outside [0,1]");
    return scores;
}

inline ClassificationResult make_result(const EntityDescription& d, const std::vector<StakeholderLabel>& candidates,
                                        const std::vector<double>& scores, const nli::PromptTemplate& tmpl)
{
    ClassificationResult r;
    r.entity_phrase = d.entity_name;
    r.template_id = tmpl.id();
    for (std::size_t i = 0; i < candidates.size(); ++i) r.scores.emplace_back(candidates[i].name, scores[i]);
    return r;
}
}  // namespace detail

/// Scores every candidate in one batch and predicts the argmax; ties go to
/// the earliest candidate.
inline ClassificationResult classify_single(const EntityDescription& description,
                                            const std::vector<StakeholderLabel>& candidates,
                                            const nli::PromptTemplate& tmpl, EntailmentScorer& scorer)
{
    const auto scores = detail::score_candidates(description, candidates, tmpl, scorer);
    auto r = detail::make_result(description, candidates, scores, tmpl);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    r.predicted = {candidates[best].name};
    return r;
}

/// Up to `k` labels scoring at least `threshold`, highest first; equal
/// scores keep candidate order.
inline ClassificationResult classify_multi(const EntityDescription& description,
                                           const std::vector<StakeholderLabel>& candidates,
                                           const nli::PromptTemplate& tmpl, EntailmentScorer& scorer, double threshold,
                                           std::size_t k)
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw input_error("threshold must be in [0,1]");
    if (k == 0) throw input_error("top-k must be positive");
    const auto scores = detail::score_candidates(description, candidates, tmpl, scorer);
    auto r = detail::make_result(description, candidates, scores, tmpl);
    r.multi_label = true;

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (auto i : order) {
        if (r.predicted.size() == k || scores[i] < threshold) break;
        r.predicted.push_back(candidates[i].name);
    }
    return r;
}

/// Prediction record: {"id","entity_phrase","topic","template_id","backend",
/// "scores":{label:score,...},"predicted": label | [labels]}.
inline ordered_json result_to_json(const std::string& id, const std::string& topic, const std::string& backend,
                                   const ClassificationResult& r)
{
    ordered_json scores = ordered_json::object();
    for (const auto& [l, s] : r.scores) scores[l] = s;
    ordered_json j{{"id", id},           {"entity_phrase", r.entity_phrase}, {"topic", topic},
                   {"template_id", r.template_id}, {"backend", backend}, {"scores", std::move(scores)}};
    if (r.multi_label)
        j["predicted"] = r.predicted;
    else
        j["predicted"] = r.predicted.front();
    return j;
}

}  // namespace stakenli::zeroshot
