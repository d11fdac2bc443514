#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "attrib/lexicons.hpp"
#include "attrib/text.hpp"
#include "json.hpp"

namespace attrib {

inline constexpr int kFeatureCount = 24;

// Column names for CSV export, indexed exactly as FeatureVector.
extern const std::array<const char*, kFeatureCount> kFeatureNames;

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    bool degenerate = false;  // sentence had zero word tokens
};

// Word-level add-one-smoothed n-gram model with sentence-boundary padding.
// The vocabulary for smoothing is the set of distinct training words plus the
// end-of-sentence symbol (the start symbol is never predicted).
class NgramModel {
public:
    NgramModel() = default;

    static NgramModel fit(const std::vector<std::string>& texts, int order);

    int order() const { return order_; }
    std::int64_t vocabulary_size() const { return vocab_size_; }

    // P(word | context) with add-one smoothing; context uses start-symbol
    // padding when shorter than order-1.
    double probability(const std::vector<std::string>& context,
                       const std::string& word) const;

    // Arithmetic mean of the n-gram probabilities over the padded sentence;
    // 1.0 for an empty word sequence.
    double average_sentence_probability(
        const std::vector<std::string>& lower_words) const;

    nlohmann::json to_json() const;
    static NgramModel from_json(const nlohmann::json& j);

private:
    int order_ = 2;
    std::int64_t vocab_size_ = 1;
    std::unordered_map<std::string, std::int64_t> gram_counts_;
    std::unordered_map<std::string, std::int64_t> context_counts_;
};

struct PosCounts {
    int nouns = 0;
    int verbs = 0;
};

// Rule-lexicon tagger: closed-class lists plus suffix rules.
PosCounts count_pos(const TokenizedSentence& tokens, const Lexicons& lex);

// Named-entity flags under the capitalization heuristic: capitalized and not
// sentence-initial, or sentence-initial and immediately followed by another
// capitalized token.
std::vector<bool> named_entity_flags(const TokenizedSentence& tokens);

// The 22 split-independent features; f13/f14 are left at their degenerate
// value 1.0 until add_ngram_features supplies them.
FeatureVector extract_base_features(const std::string& text,
                                    const Lexicons& lex);

void add_ngram_features(FeatureVector& fv, const std::string& text,
                        const NgramModel& bigram, const NgramModel& trigram);

FeatureVector extract_features(const std::string& text,
                               const NgramModel& bigram,
                               const NgramModel& trigram, const Lexicons& lex);

}  // namespace attrib
