#pragma once

// Hand-rolled generators for property tests.

#include "stakenli/core.hpp"
#include "stakenli/entity_pipeline.hpp"
#include "stakenli/similarity.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace gen {

inline std::string capitalized_word(std::mt19937_64& rng)
{
    static const char* syllables[] = {"ra", "ma", "ni", "shan", "ku", "dev", "lo", "pri", "sa", "tha", "vi", "jay"};
    std::string w;
    const auto n = 2 + rng() % 2;
    for (std::size_t i = 0; i < n; ++i) w += syllables[rng() % std::size(syllables)];
    w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
}

/// Surface variant of "First Last": full name, last name only, an initial
/// abbreviation, a one-letter typo, or an honorific prefix.
inline std::string perturb(const std::string& first, const std::string& last, std::mt19937_64& rng)
{
    switch (rng() % 5) {
    case 0: return first + " " + last;
    case 1: return last;
    case 2: return std::string(1, first[0]) + ". " + last;
    case 3: {
        std::string s = first + " " + last;
        const auto pos = 1 + rng() % (s.size() - 1);
        if (s[pos] != ' ') s[pos] = static_cast<char>('a' + rng() % 26);
        return s;
    }
    default: return (rng() % 2 ? "Dr. " : "Shri ") + first + " " + last;
    }
}

/// Clusters for a synthetic corpus: a few canonical names, each appearing
/// under several perturbed surfaces. Every cluster gets a unique doc id
/// ("c<i>") so tests can track it through resolution.
inline std::vector<stakenli::EntityCluster> name_variant_clusters(std::mt19937_64& rng)
{
    using namespace stakenli;
    const std::size_t n_names = 2 + rng() % 5;
    std::vector<EntityCluster> out;
    for (std::size_t n = 0; n < n_names; ++n) {
        const auto first = capitalized_word(rng);
        const auto last = capitalized_word(rng);
        const EntityKind kind = rng() % 4 == 0 ? EntityKind::organization : EntityKind::person;
        const std::size_t copies = 1 + rng() % 4;
        for (std::size_t c = 0; c < copies; ++c) {
            const auto surface = perturb(first, last, rng);
            EntityCluster cl;
            cl.doc_id = "c" + std::to_string(out.size());
            cl.canonical = surface;
            cl.kind = kind;
            cl.mentions.push_back({surface, kind, cl.doc_id, {0, surface.size()}, 0});
            out.push_back(std::move(cl));
        }
    }
    std::shuffle(out.begin(), out.end(), rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].doc_id = "c" + std::to_string(i);
        for (auto& m : out[i].mentions) m.doc_id = out[i].doc_id;
    }
    return out;
}

/// Partition of cluster ids, as a set of sets.
inline std::set<std::set<std::string>> partition_of(const std::vector<stakenli::CrossDocEntity>& entities)
{
    std::set<std::set<std::string>> out;
    for (const auto& e : entities) {
        std::set<std::string> ids;
        for (const auto& c : e.clusters) ids.insert(c.doc_id);
        out.insert(ids);
    }
    return out;
}

/// Connected components of the same-kind match graph, found by depth-first
/// search: the partition a correct cross-document resolver must produce.
inline std::set<std::set<std::string>> match_components(const std::vector<stakenli::EntityCluster>& clusters,
                                                        const stakenli::PipelineConfig& config)
{
    const std::size_t n = clusters.size();
    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            edge[i][j] = i != j && clusters[i].kind == clusters[j].kind &&
                         stakenli::similarity::mention_match(clusters[i].canonical, clusters[j].canonical, config).matched;
    std::vector<bool> seen(n, false);
    std::set<std::set<std::string>> out;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        std::set<std::string> comp;
        std::vector<std::size_t> stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            comp.insert(clusters[v].doc_id);
            for (std::size_t w = 0; w < n; ++w)
                if (edge[v][w] && !seen[w]) {
                    seen[w] = true;
                    stack.push_back(w);
                }
        }
        out.insert(comp);
    }
    return out;
}

}  // namespace gen
