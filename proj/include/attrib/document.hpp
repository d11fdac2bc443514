#pragma once

#include <string>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/corpus.hpp"

#include "json.hpp"

namespace attrib {

// Rule-based sentence segmentation: terminal punctuation ends a sentence
// unless the preceding token is on the abbreviation list (e.g., "Dr.",
// "Fig.", "e.g.") or a single-letter initial.  Fragments under three words
// merge into the previous sentence.  Quotes are indexed 1..n in document
// order.  An empty document is fatal.
std::vector<Quote> segment_document(const std::string& text);

struct ReportEntry {
    std::string sentence;
    RefClass predicted = RefClass::Zero;
    AttributionResult result;
    std::string error;  // non-empty when embedding failed for this sentence
};

struct AttributionReport {
    std::vector<Quote> quotes;        // segmented source document
    std::vector<ReportEntry> entries;  // one per answer sentence, in order
    bool complete = true;

    std::string to_text() const;
    nlohmann::json to_json() const;
};

// Segments both inputs, classifies each answer sentence, and attributes the
// non-Zero ones against the document's quotes.  Per-sentence embedding
// failures are recorded in the entry and clear `complete`; the rest of the
// report still renders.
AttributionReport attribute_document(const std::string& answer,
                                     const std::string& document,
                                     const ForestModel& model,
                                     const FeatureContext& ctx,
                                     EmbeddingProvider& provider,
                                     Warnings* warnings = nullptr);

}  // namespace attrib
