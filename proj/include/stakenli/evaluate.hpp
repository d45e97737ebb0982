#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"
#include "stakenli/ingest.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/nli_transform.hpp"
#include "stakenli/zeroshot.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace stakenli::eval {

struct LabelCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

/// Per-label counts over a fixed label universe.
struct ConfusionTable {
    std::vector<std::string> universe;
    std::vector<LabelCounts> counts;  ///< parallel to universe
};

struct LabelMetrics {
    std::string label;
    LabelCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::string split;
    std::string template_id;
    std::string backend;
    std::size_t n_examples = 0;
    std::vector<LabelMetrics> per_label;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

/// Gold labels must lie in `universe`. A prediction outside the universe
/// earns no credit and is charged to no universe label (it still costs the
/// gold label a false negative).
inline ConfusionTable confusion_table(const std::vector<std::string>& golds, const std::vector<std::string>& preds,
                                      const std::vector<std::string>& universe)
{
    if (golds.size() != preds.size())
        throw input_error("gold/prediction length mismatch: " + std::to_string(golds.size()) + " vs " +
                          std::to_string(preds.size()));
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (!slot.emplace(universe[i], i).second) throw input_error("duplicate label '" + universe[i] + "' in universe");

    ConfusionTable t{universe, std::vector<LabelCounts>(universe.size())};
    for (std::size_t i = 0; i < golds.size(); ++i) {
        auto g = slot.find(golds[i]);
        if (g == slot.end()) throw input_error("gold label '" + golds[i] + "' is not in the label universe");
        auto p = slot.find(preds[i]);
        if (golds[i] == preds[i]) {
            ++t.counts[g->second].tp;
        } else {
            ++t.counts[g->second].fn;
            if (p != slot.end()) ++t.counts[p->second].fp;
        }
    }
    return t;
}

/// P = tp/(tp+fp), R = tp/(tp+fn), F1 their harmonic mean; each is 0 when
/// its denominator is. Macro values are unweighted means over the universe.
inline EvalReport score_predictions(const std::vector<std::string>& golds, const std::vector<std::string>& preds,
                                    const std::vector<std::string>& universe)
{
    const auto table = confusion_table(golds, preds, universe);
    EvalReport r;
    r.n_examples = golds.size();
    for (std::size_t i = 0; i < universe.size(); ++i) {
        const auto& c = table.counts[i];
        LabelMetrics m{universe[i], c, 0.0, 0.0, 0.0};
        if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.per_label.push_back(std::move(m));
    }
    if (!universe.empty()) {
        const auto n = static_cast<double>(universe.size());
        r.macro_precision /= n;
        r.macro_recall /= n;
        r.macro_f1 /= n;
    }
    return r;
}

struct SplitPrediction {
    std::string id;
    std::string topic;
    std::string gold;
    zeroshot::ClassificationResult result;
};

struct SplitEvaluation {
    EvalReport report;
    std::vector<SplitPrediction> predictions;
};

/// Single-label classification of every example against its topic's
/// candidates, scored over the split's own gold-label set (sorted).
inline SplitEvaluation evaluate_split(const std::vector<LabeledExample>& split, const LabelRegistry& registry,
                                      const nli::PromptTemplate& tmpl, zeroshot::EntailmentScorer& scorer,
                                      const PipelineConfig& config, const std::string& split_name = "split")
{
    (void)config;
    if (split.empty()) throw input_error("cannot evaluate an empty split");
    SplitEvaluation out;
    std::vector<std::string> golds, preds;
    for (const auto& ex : split) {
        auto result = zeroshot::classify_single(ex.description, candidates_for_topic(registry, ex.topic), tmpl, scorer);
        golds.push_back(ex.label);
        preds.push_back(result.predicted.front());
        out.predictions.push_back({ex.id, ex.topic, ex.label, std::move(result)});
    }
    const auto gold_set = ingest::label_set(split);
    out.report = score_predictions(golds, preds, {gold_set.begin(), gold_set.end()});
    out.report.split = split_name;
    out.report.template_id = tmpl.id();
    out.report.backend = scorer.id();
    return out;
}

struct RobustnessReport {
    std::vector<EvalReport> per_template;
    double max_spread = 0.0;  ///< largest pairwise macro-F1 difference
};

inline RobustnessReport robustness_sweep(const std::vector<LabeledExample>& split, const LabelRegistry& registry,
                                         const std::vector<nli::PromptTemplate>& templates,
                                         zeroshot::EntailmentScorer& scorer, const PipelineConfig& config,
                                         const std::string& split_name = "split")
{
    if (templates.size() < 2) throw input_error("robustness sweep needs at least two templates");
    RobustnessReport r;
    for (const auto& t : templates) r.per_template.push_back(evaluate_split(split, registry, t, scorer, config, split_name).report);
    const auto [lo, hi] = std::minmax_element(r.per_template.begin(), r.per_template.end(),
                                              [](const EvalReport& a, const EvalReport& b) { return a.macro_f1 < b.macro_f1; });
    r.max_spread = hi->macro_f1 - lo->macro_f1;
    return r;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline ordered_json report_to_json(const EvalReport& r)
{
    ordered_json labels = ordered_json::array();
    for (const auto& m : r.per_label)
        labels.push_back({{"label", m.label},
                          {"tp", m.counts.tp},
                          {"fp", m.counts.fp},
                          {"fn", m.counts.fn},
                          {"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1}});
    return {{"split", r.split},
            {"template_id", r.template_id},
            {"backend", r.backend},
            {"n_examples", r.n_examples},
            {"macro", {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}}},
            {"per_label", std::move(labels)}};
}

inline ordered_json robustness_to_json(const RobustnessReport& r)
{
    ordered_json reports = ordered_json::array();
    for (const auto& e : r.per_template) reports.push_back(report_to_json(e));
    return {{"templates", std::move(reports)}, {"max_spread", r.max_spread}};
}

namespace detail {
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}
inline std::string fixed6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
}  // namespace detail

inline constexpr const char* csv_header = "split,template_id,backend,label,tp,fp,fn,precision,recall,f1\n";

/// One row per label; no header.
inline std::string report_csv_rows(const EvalReport& r)
{
    std::string out;
    for (const auto& m : r.per_label) {
        out += detail::csv_field(r.split) + ',' + detail::csv_field(r.template_id) + ',' + detail::csv_field(r.backend) +
               ',' + detail::csv_field(m.label) + ',' + std::to_string(m.counts.tp) + ',' + std::to_string(m.counts.fp) +
               ',' + std::to_string(m.counts.fn) + ',' + detail::fixed6(m.precision) + ',' + detail::fixed6(m.recall) +
               ',' + detail::fixed6(m.f1) + '\n';
    }
    return out;
}

}  // namespace stakenli::eval
