#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attrib/common.hpp"

namespace attrib {

// One indexed source passage a sentence may be attributed to.
struct Quote {
    int index = 0;  // 1-based, as cited in answers
    std::string text;
};

enum class LabelOrigin { Dataset, CleanedOverride };

struct LabeledSentence {
    std::string text;        // citation markers stripped, whitespace collapsed
    std::vector<int> refs;   // sorted, unique quote indices
    RefClass ref_class = RefClass::Zero;
    LabelOrigin origin = LabelOrigin::Dataset;
    bool invalid = false;    // cleaned label was "invalid" (mapped to Zero)
};

struct QuerySample {
    std::string id;
    std::string query;
    std::vector<Quote> quotes;
    std::vector<std::vector<LabeledSentence>> answers;  // 1 or 2 answers
};

enum class DatasetSchema { Hagrid, WebglmQa, HagridClean };

DatasetSchema schema_from_string(const std::string& s);
const char* to_string(DatasetSchema s);

// ---------------------------------------------------------------------------
// Citation-marker parsing

struct MarkerParse {
    std::string clean_text;
    std::vector<int> refs;                // sorted, unique
    std::vector<std::string> warnings;    // offending spans that did not parse
};

// Strips every citation marker matching the closed grammar ([1], [1][2],
// [1,2], [1, 2], [1,2,], [1 and 2], [1-3], sentence-final (1), [context 1],
// and their multi-digit / longer-list generalizations) and returns the
// cleaned sentence plus the union of cited indices.  Bracketed spans that do
// not parse are kept verbatim and reported as warnings.
MarkerParse parse_reference_markers(const std::string& raw);

// Canonical rendering used by the round-trip property: appends " [i,j,...]"
// when refs is non-empty.
std::string render_with_marker(const std::string& clean_text,
                               const std::vector<int>& refs);

// ---------------------------------------------------------------------------
// Dataset ingestion

// Reads records in the declared schema from JSON (array or line-delimited).
// Raw schemas run every sentence through parse_reference_markers; the cleaned
// schema is already tupled.  Schema violations are fatal and name the record.
std::vector<QuerySample> load_samples(std::istream& in, DatasetSchema schema,
                                      Warnings* warnings = nullptr);
std::vector<QuerySample> load_samples_file(const std::string& path,
                                           DatasetSchema schema,
                                           Warnings* warnings = nullptr);

// Sidecar of cleaned labels, one JSON object per line:
//   {"sample_id": ..., "text": <normalized sentence>, "label": "one"}
// Applied after dedup; label "invalid" maps to Zero with the invalid flag.
void apply_label_sidecar(std::vector<QuerySample>& samples,
                         const std::string& path, Warnings* warnings = nullptr);

// Per-|refs| class counts over every sentence as loaded (pre-dedup).
std::array<std::int64_t, 3> raw_class_counts(
    const std::vector<QuerySample>& samples);

std::int64_t sentence_count(const std::vector<QuerySample>& samples);

// ---------------------------------------------------------------------------
// Corpus

struct SentenceEntry {
    LabeledSentence sentence;
    int sample_index = -1;  // back-reference into samples()
};

class LabeledCorpus {
public:
    LabeledCorpus() = default;
    LabeledCorpus(std::shared_ptr<const std::vector<QuerySample>> samples,
                  std::vector<SentenceEntry> sentences);

    const std::vector<SentenceEntry>& sentences() const { return sentences_; }
    const std::vector<QuerySample>& samples() const { return *samples_; }
    std::shared_ptr<const std::vector<QuerySample>> samples_ptr() const {
        return samples_;
    }
    const std::array<std::int64_t, 3>& class_counts() const {
        return class_counts_;
    }
    std::size_t size() const { return sentences_.size(); }

private:
    std::shared_ptr<const std::vector<QuerySample>> samples_;
    std::vector<SentenceEntry> sentences_;
    std::array<std::int64_t, 3> class_counts_{0, 0, 0};
};

// Merges sentences with identical normalized text within each sample (across
// answers), unioning their refs, and builds the corpus-level sentence list.
// Idempotent.
LabeledCorpus normalize_and_dedupe(std::vector<QuerySample> samples);

// One entry per sentence occurrence, duplicates kept (the uncleaned view).
LabeledCorpus corpus_from_samples(std::vector<QuerySample> samples);

// Class from |refs| unless a cleaned override is given; "invalid" maps to
// Zero.  Throws FatalError for an unknown override value.
RefClass assign_ref_class(const LabeledSentence& s,
                          const std::optional<std::string>& override_label);

// Index form of the stratified split, for callers that cache per-sentence
// state across runs.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_split_indices(const LabeledCorpus& corpus, double train_fraction,
                         std::uint64_t seed);

// Deterministic per-class split preserving class ratios to within one
// element.  Throws FatalError when a class has fewer than 2 members.
std::pair<LabeledCorpus, LabeledCorpus> stratified_split(
    const LabeledCorpus& corpus, double train_fraction, std::uint64_t seed);

// One JSON object per line: {sample_id, sentence_id, text, refs, label}.
void write_corpus_jsonl(const LabeledCorpus& corpus, std::ostream& out);

}  // namespace attrib
