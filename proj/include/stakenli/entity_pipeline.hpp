#pragma once

#include "stakenli/core.hpp"
#include "stakenli/error.hpp"
#include "stakenli/ingest.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/similarity.hpp"
#include "stakenli/text.hpp"
#include "stakenli/union_find.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

namespace stakenli {

struct EntityCluster {
    std::string doc_id;
    std::string canonical;
    std::vector<EntityMention> mentions;  ///< ascending by span start
    EntityKind kind = EntityKind::other;

    std::size_t first_offset() const { return mentions.front().span.begin; }
};

struct CrossDocEntity {
    std::string canonical;
    std::vector<EntityCluster> clusters;  ///< input order
    EntityKind kind = EntityKind::other;
};

struct ContextSentence {
    std::size_t sentence_index = 0;
    std::string text;

    friend bool operator==(const ContextSentence&, const ContextSentence&) = default;
};

/// Within-document context of one cluster, tagged with its document's date
/// so snippets can be ordered chronologically.
struct ClusterContext {
    std::string doc_id;
    std::optional<std::string> date;
    std::vector<ContextSentence> sentences;
};

// ---------------------------------------------------------------------------
// Provider interfaces
// ---------------------------------------------------------------------------

struct RecognizedEntity {
    std::string surface;
    EntityKind kind = EntityKind::other;
    ByteSpan span;
};

class EntityRecognizer {
public:
    virtual ~EntityRecognizer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<RecognizedEntity> recognize(std::string_view text) = 0;
};

/// Partitions a document's mentions into coreference chains, as lists of
/// indices into `mentions`.
class CoreferenceResolver {
public:
    virtual ~CoreferenceResolver() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::vector<std::size_t>> resolve(const Document& doc,
                                                          const std::vector<EntityMention>& mentions) = 0;
};

// ---------------------------------------------------------------------------
// Built-in providers
// ---------------------------------------------------------------------------

struct GazetteerEntry {
    std::string surface;
    EntityKind kind = EntityKind::other;
};

/// Exact, case-sensitive dictionary matcher. Matches must sit on word
/// boundaries; at each position the longest entry wins and matches never overlap.
class GazetteerRecognizer final : public EntityRecognizer {
public:
    explicit GazetteerRecognizer(std::vector<GazetteerEntry> entries) : entries_(std::move(entries))
    {
        entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                      [](const GazetteerEntry& e) { return e.surface.empty(); }),
                       entries_.end());
        std::stable_sort(entries_.begin(), entries_.end(), [](const GazetteerEntry& a, const GazetteerEntry& b) {
            return a.surface.size() > b.surface.size();
        });
    }

    std::string name() const override { return "gazetteer"; }

    std::size_t size() const { return entries_.size(); }

    std::vector<RecognizedEntity> recognize(std::string_view text) override
    {
        std::vector<RecognizedEntity> out;
        std::size_t pos = 0;
        while (pos < text.size()) {
            const GazetteerEntry* hit = nullptr;
            if (text::word_boundary_before(text, pos)) {
                for (const auto& e : entries_) {
                    if (text.compare(pos, e.surface.size(), e.surface) == 0 &&
                        text::word_boundary_after(text, pos + e.surface.size())) {
                        hit = &e;
                        break;
                    }
                }
            }
            if (hit) {
                out.push_back({hit->surface, hit->kind, {pos, pos + hit->surface.size()}});
                pos += hit->surface.size();
            } else {
                ++pos;
            }
        }
        return out;
    }

private:
    std::vector<GazetteerEntry> entries_;
};

inline std::vector<GazetteerEntry> parse_gazetteer(std::string_view content, const std::string& source)
{
    const json j = io::parse_document(content, source);
    if (!j.is_array()) throw input_error(source + ": gazetteer must be a JSON list of {surface, kind}");
    std::vector<GazetteerEntry> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = source + ": [" + std::to_string(i) + "]";
        try {
            if (!j[i].is_object()) throw input_error("expected an object");
            const auto kind_name = io::require_string(j[i], "kind");
            const auto kind = parse_entity_kind(kind_name);
            if (!kind) throw input_error("unknown entity kind '" + kind_name + "'");
            auto surface = io::require_string(j[i], "surface");
            if (surface.empty()) throw input_error("surface must be non-empty");
            out.push_back({std::move(surface), *kind});
        } catch (const Error& e) {
            throw input_error(where + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<GazetteerEntry> load_gazetteer(const std::filesystem::path& path)
{
    return parse_gazetteer(io::read_file(path), path.string());
}

/// Fallback coreference: nominal mentions only. Identical normalized surfaces
/// always share a chain, whose kind is that of their first mention. Distinct
/// surfaces are visited longest first (ties: earliest position); each joins
/// the same-kind chain whose canonical it matches with the highest
/// Jaro-Winkler score (ties: the chain that starts earliest), or opens a new
/// chain.
class SimilarityResolver final : public CoreferenceResolver {
public:
    explicit SimilarityResolver(PipelineConfig config = {}) : config_(std::move(config)) {}

    std::string name() const override { return "similarity"; }

    std::vector<std::vector<std::size_t>> resolve(const Document&, const std::vector<EntityMention>& mentions) override
    {
        struct Group {
            std::string key;
            EntityKind kind;
            std::string longest;  // longest raw surface in the group
            std::size_t first_offset;
            std::vector<std::size_t> members;
        };
        std::vector<Group> groups;
        for (std::size_t i = 0; i < mentions.size(); ++i) {
            const auto& m = mentions[i];
            std::string key = similarity::normalize_mention(m.surface);
            if (key.empty()) key = m.surface;
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const Group& g) { return g.key == key; });
            if (it == groups.end()) {
                groups.push_back({key, m.kind, m.surface, m.span.begin, {i}});
            } else {
                it->members.push_back(i);
                if (m.surface.size() > it->longest.size() ||
                    (m.surface.size() == it->longest.size() && m.span.begin < it->first_offset))
                    it->longest = m.surface;
                it->first_offset = std::min(it->first_offset, m.span.begin);
            }
        }
        std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
            if (a.longest.size() != b.longest.size()) return a.longest.size() > b.longest.size();
            return a.first_offset < b.first_offset;
        });

        struct Chain {
            std::string canonical;
            EntityKind kind;
            std::size_t first_offset;
            std::vector<std::size_t> members;
        };
        std::vector<Chain> chains;
        for (const auto& g : groups) {
            Chain* best = nullptr;
            double best_score = -1.0;
            for (auto& c : chains) {
                if (c.kind != g.kind) continue;
                const auto d = similarity::mention_match(g.longest, c.canonical, config_);
                if (!d.matched) continue;
                if (d.score > best_score || (d.score == best_score && c.first_offset < best->first_offset)) {
                    best = &c;
                    best_score = d.score;
                }
            }
            if (best) {
                best->members.insert(best->members.end(), g.members.begin(), g.members.end());
                best->first_offset = std::min(best->first_offset, g.first_offset);
            } else {
                chains.push_back({g.longest, g.kind, g.first_offset, g.members});
            }
        }

        std::vector<std::vector<std::size_t>> out;
        for (auto& c : chains) {
            std::sort(c.members.begin(), c.members.end());
            out.push_back(std::move(c.members));
        }
        return out;
    }

private:
    PipelineConfig config_;
};

// ---------------------------------------------------------------------------
// Per-document stages
// ---------------------------------------------------------------------------

/// Runs the recognizer and turns its output into validated mentions with
/// sentence indices. Any provider failure surfaces as a provider error.
inline std::vector<EntityMention> recognize_entities(const Document& doc, EntityRecognizer& recognizer)
{
    std::vector<RecognizedEntity> found;
    try {
        found = recognizer.recognize(doc.text);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::provider) throw;
        throw provider_error(recognizer.name(), e.what());
    } catch (const std::exception& e) {
        throw provider_error(recognizer.name(), e.what());
    }

    const auto sentences = text::split_sentences(doc.text);
    std::vector<EntityMention> out;
    out.reserve(found.size());
    for (auto& r : found) {
        EntityMention m{std::move(r.surface), r.kind, doc.id, r.span, 0};
        try {
            validate_mention(m, doc);
        } catch (const Error& e) {
            throw provider_error(recognizer.name(), e.what());
        }
        m.sentence_index = text::sentence_of(sentences, m.span.begin);
        out.push_back(std::move(m));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const EntityMention& a, const EntityMention& b) { return a.span.begin < b.span.begin; });
    return out;
}

inline bool is_stakeholder_kind(EntityKind k)
{
    return k == EntityKind::person || k == EntityKind::geopolitical || k == EntityKind::organization;
}

inline std::vector<EntityMention> filter_stakeholder_kinds(std::vector<EntityMention> mentions)
{
    mentions.erase(std::remove_if(mentions.begin(), mentions.end(),
                                  [](const EntityMention& m) { return !is_stakeholder_kind(m.kind); }),
                   mentions.end());
    return mentions;
}

namespace detail {
inline EntityCluster make_cluster(const std::string& doc_id, std::vector<EntityMention> mentions)
{
    std::stable_sort(mentions.begin(), mentions.end(),
                     [](const EntityMention& a, const EntityMention& b) { return a.span.begin < b.span.begin; });
    const EntityMention* canonical = &mentions.front();
    for (const auto& m : mentions)
        if (m.surface.size() > canonical->surface.size()) canonical = &m;
    EntityCluster c{doc_id, canonical->surface, {}, canonical->kind};
    c.mentions = std::move(mentions);
    return c;
}
}  // namespace detail

/// Partitions the document's mentions into clusters via `resolver`, checking
/// that its answer is a partition that keeps identical surfaces together.
/// Clusters come back ordered by first mention.
inline std::vector<EntityCluster> resolve_within_doc(const Document& doc, const std::vector<EntityMention>& mentions,
                                                     CoreferenceResolver& resolver)
{
    for (const auto& m : mentions) validate_mention(m, doc);
    if (mentions.empty()) return {};

    std::vector<std::vector<std::size_t>> chains;
    try {
        chains = resolver.resolve(doc, mentions);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::provider) throw;
        throw provider_error(resolver.name(), e.what());
    } catch (const std::exception& e) {
        throw provider_error(resolver.name(), e.what());
    }

    std::vector<std::size_t> chain_of(mentions.size(), static_cast<std::size_t>(-1));
    for (std::size_t c = 0; c < chains.size(); ++c) {
        if (chains[c].empty()) throw provider_error(resolver.name(), "returned an empty chain");
        for (auto i : chains[c]) {
            if (i >= mentions.size()) throw provider_error(resolver.name(), "chain index out of range");
            if (chain_of[i] != static_cast<std::size_t>(-1))
                throw provider_error(resolver.name(), "mention assigned to two chains");
            chain_of[i] = c;
        }
    }
    std::map<std::string, std::size_t> surface_chain;
    for (std::size_t i = 0; i < mentions.size(); ++i) {
        if (chain_of[i] == static_cast<std::size_t>(-1))
            throw provider_error(resolver.name(), "mention '" + mentions[i].surface + "' left unassigned");
        auto [it, inserted] = surface_chain.emplace(mentions[i].surface, chain_of[i]);
        if (!inserted && it->second != chain_of[i])
            throw provider_error(resolver.name(), "split identical mentions of '" + mentions[i].surface + "'");
    }

    std::vector<EntityCluster> out;
    for (const auto& chain : chains) {
        std::vector<EntityMention> members;
        for (auto i : chain) members.push_back(mentions[i]);
        out.push_back(detail::make_cluster(doc.id, std::move(members)));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const EntityCluster& a, const EntityCluster& b) { return a.first_offset() < b.first_offset(); });
    return out;
}

inline std::vector<EntityCluster> salient_clusters(std::vector<EntityCluster> clusters, std::size_t min_mentions)
{
    if (min_mentions == 0) throw input_error("min_mentions must be positive");
    clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                  [&](const EntityCluster& c) { return c.mentions.size() < min_mentions; }),
                   clusters.end());
    return clusters;
}

/// Sentences holding at least one mention of the cluster, once each, in document order.
inline std::vector<ContextSentence> wd_context(const Document& doc, const EntityCluster& cluster)
{
    if (cluster.doc_id != doc.id)
        throw input_error("cluster '" + cluster.canonical + "' belongs to '" + cluster.doc_id + "', not '" + doc.id + "'");
    const auto sentences = text::split_sentences(doc.text);
    std::set<std::size_t> indices;
    for (const auto& m : cluster.mentions) indices.insert(text::sentence_of(sentences, m.span.begin));
    std::vector<ContextSentence> out;
    for (auto i : indices) out.push_back({i, sentences[i].text});
    return out;
}

// ---------------------------------------------------------------------------
// Cross-document stages
// ---------------------------------------------------------------------------

/// Union-find over clusters of the same kind, joining pairs whose canonicals
/// pass mention_match. Entities are ordered by their first input cluster; the
/// canonical is the longest cluster canonical (ties: earliest).
inline std::vector<CrossDocEntity> resolve_cross_doc(const std::vector<EntityCluster>& all_clusters,
                                                     const PipelineConfig& config)
{
    UnionFind uf(all_clusters.size());
    for (std::size_t i = 0; i < all_clusters.size(); ++i)
        for (std::size_t j = i + 1; j < all_clusters.size(); ++j)
            if (all_clusters[i].kind == all_clusters[j].kind &&
                similarity::mention_match(all_clusters[i].canonical, all_clusters[j].canonical, config).matched)
                uf.unite(i, j);

    std::vector<CrossDocEntity> out;
    for (const auto& group : uf.groups()) {
        CrossDocEntity e;
        e.kind = all_clusters[group.front()].kind;
        for (auto i : group) {
            e.clusters.push_back(all_clusters[i]);
            if (all_clusters[i].canonical.size() > e.canonical.size()) e.canonical = all_clusters[i].canonical;
        }
        out.push_back(std::move(e));
    }
    return out;
}

namespace detail {
inline std::string join_prefix(const std::optional<std::string>& background, const std::vector<Snippet>& snippets,
                               std::size_t count)
{
    return render_description(background, std::vector<Snippet>(snippets.begin(), snippets.begin() + count));
}

/// The first `n` sentences of `s`, sliced verbatim.
inline std::string leading_sentences(const std::string& s, const std::vector<text::Sentence>& sentences, std::size_t n)
{
    const auto begin = sentences.front().span.begin;
    return text::detail::trim(std::string_view(s).substr(begin, sentences[n - 1].span.end - begin));
}
}  // namespace detail

/// Builds w ⊕ M for one entity. Snippets are ordered by (document date, with
/// undated documents last; doc_id; sentence_index) and deduplicated. The
/// rendered text keeps whole sentences within `max_premise_chars`: background
/// first, then as many snippets as fit. At least one snippet always survives;
/// trailing background sentences are dropped to make room for it, and a
/// first snippet longer than the budget is kept whole.
inline EntityDescription build_description(const CrossDocEntity& entity, const std::vector<ClusterContext>& contexts,
                                           std::optional<std::string> background, const PipelineConfig& config)
{
    struct Keyed {
        bool undated;
        std::string date;
        Snippet snippet;
    };
    std::vector<Keyed> keyed;
    for (const auto& ctx : contexts)
        for (const auto& s : ctx.sentences)
            keyed.push_back({!ctx.date.has_value(), ctx.date.value_or(""), {ctx.doc_id, s.sentence_index, s.text}});
    if (keyed.empty()) throw input_error("entity '" + entity.canonical + "' has no context sentences");

    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return std::tie(a.undated, a.date, a.snippet.doc_id, a.snippet.sentence_index) <
               std::tie(b.undated, b.date, b.snippet.doc_id, b.snippet.sentence_index);
    });
    std::vector<Snippet> snippets;
    for (auto& k : keyed) {
        if (!snippets.empty() && snippets.back().doc_id == k.snippet.doc_id &&
            snippets.back().sentence_index == k.snippet.sentence_index)
            continue;
        snippets.push_back(std::move(k.snippet));
    }

    if (background && text::detail::trim(*background).empty()) background.reset();
    const std::size_t budget = config.max_premise_chars;

    auto fits = [&](const std::optional<std::string>& bg, std::size_t count) {
        return detail::join_prefix(bg, snippets, count).size() <= budget;
    };

    if (background && !fits(background, 1)) {
        const auto sentences = text::split_sentences(*background);
        std::optional<std::string> shortened;
        for (std::size_t n = sentences.size(); n-- > 1;) {
            std::optional<std::string> candidate = detail::leading_sentences(*background, sentences, n);
            if (fits(candidate, 1)) {
                shortened = std::move(candidate);
                break;
            }
        }
        background = std::move(shortened);
    }

    std::size_t keep = 1;
    while (keep < snippets.size() && fits(background, keep + 1)) ++keep;
    snippets.resize(keep);
    return make_description(entity.canonical, std::move(background), std::move(snippets));
}

// ---------------------------------------------------------------------------
// End-to-end
// ---------------------------------------------------------------------------

/// One output record of the description stage.
struct DescribedEntity {
    std::string id;
    std::string topic;
    EntityKind kind = EntityKind::other;
    EntityDescription description;
};

inline ordered_json described_to_json(const DescribedEntity& d)
{
    ordered_json j;
    if (d.id != d.description.entity_name) j["id"] = d.id;
    j["entity_phrase"] = d.description.entity_name;
    j["entity_kind"] = std::string(to_string(d.kind));
    j["topic"] = d.topic;
    j["description"] = description_to_json(d.description);
    return j;
}

using BackgroundLookup = std::function<std::optional<std::string>(const std::string& phrase)>;

struct DescribeOptions {
    PipelineConfig config;
    std::size_t jobs = 1;
};

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; rethrows the first failure.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// recognize -> filter kinds -> within-doc coreference -> saliency -> contexts
/// per document (in parallel), then cross-document resolution, background
/// lookup and description assembly. One record per cross-document entity.
/// Recognizer and resolver must tolerate concurrent calls when jobs > 1.
inline std::vector<DescribedEntity> describe_corpus(const Corpus& corpus, EntityRecognizer& recognizer,
                                                    CoreferenceResolver& resolver, const BackgroundLookup& background,
                                                    const DescribeOptions& options)
{
    options.config.validate();
    const auto& docs = corpus.documents;
    std::vector<std::vector<EntityCluster>> per_doc(docs.size());
    parallel_for(docs.size(), options.jobs, [&](std::size_t i) {
        auto mentions = filter_stakeholder_kinds(recognize_entities(docs[i], recognizer));
        per_doc[i] = salient_clusters(resolve_within_doc(docs[i], mentions, resolver),
                                      options.config.saliency_min_mentions);
    });

    std::vector<EntityCluster> all;
    for (auto& clusters : per_doc)
        for (auto& c : clusters) all.push_back(std::move(c));
    const auto entities = resolve_cross_doc(all, options.config);

    std::vector<DescribedEntity> out;
    std::map<std::string, std::size_t> id_uses;
    for (const auto& e : entities) {
        std::vector<ClusterContext> contexts;
        std::map<std::string, std::size_t> topic_votes;
        std::vector<std::string> topic_order;
        for (const auto& c : e.clusters) {
            const Document* doc = corpus.find(c.doc_id);
            contexts.push_back({doc->id, doc->date, wd_context(*doc, c)});
            if (topic_votes[doc->topic]++ == 0) topic_order.push_back(doc->topic);
        }
        std::string topic = topic_order.front();
        for (const auto& t : topic_order)
            if (topic_votes[t] > topic_votes[topic]) topic = t;

        auto bg = background ? background(e.canonical) : std::nullopt;
        DescribedEntity d;
        d.description = build_description(e, contexts, std::move(bg), options.config);
        d.kind = e.kind;
        d.topic = topic;
        const auto n = ++id_uses[e.canonical];
        d.id = n == 1 ? e.canonical : e.canonical + "#" + std::to_string(n);
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace stakenli
