#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attrib/corpus.hpp"
#include "attrib/embedding.hpp"
#include "attrib/features.hpp"
#include "attrib/forest.hpp"

namespace attrib {

enum class AttributionMethod { Skipped, ClosestOne, ClosestTwo };

std::string to_string(AttributionMethod m);

struct AttributionResult {
    std::vector<int> refs;  // 1-based quote indices, sorted ascending
    AttributionMethod method = AttributionMethod::Skipped;
    std::optional<double> distance;
};

// Single closest quote by cosine distance; ties break to the lowest index.
// An empty candidate list is fatal.
AttributionResult attribute_closest(
    const EmbeddingVector& sentence,
    const std::vector<EmbeddingVector>& quotes);

// Candidates are all singletons plus all unordered pairs, a pair embedded as
// the renormalized mean of its two quote vectors.  Ties prefer fewer refs,
// then the lexicographically smallest index list.  With fewer than two quotes
// this falls back to attribute_closest and warns.
AttributionResult attribute_closest_pair(
    const EmbeddingVector& sentence,
    const std::vector<EmbeddingVector>& quotes, Warnings* warnings = nullptr);

// Routing on a pre-attribution class: Zero skips (no refs), One uses the
// closest quote, Multi uses the closest pair.
AttributionResult attribute_by_class(
    RefClass cls, const EmbeddingVector& sentence,
    const std::vector<EmbeddingVector>& quotes, Warnings* warnings = nullptr);

struct FeatureContext {
    const Lexicons* lexicons = nullptr;
    const NgramModel* bigram = nullptr;
    const NgramModel* trigram = nullptr;
};

RefClass classify_sentence(const std::string& sentence,
                           const ForestModel& model,
                           const FeatureContext& ctx);

// Full per-sentence pipeline: classify, then embed and attribute.  Zero-class
// sentences are skipped without touching the embedding provider.
AttributionResult route_and_attribute(
    const std::string& sentence, const std::vector<Quote>& quotes,
    const ForestModel& model, const FeatureContext& ctx,
    EmbeddingProvider& provider, Warnings* warnings = nullptr);

// Empty gold: predicted must be empty.  Singleton gold: exact match.  Larger
// gold: predicted must be a subset of gold with at least two elements.
bool judge_attribution(const std::vector<int>& predicted,
                       const std::vector<int>& gold);

}  // namespace attrib
