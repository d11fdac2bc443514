#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/corpus.hpp"
#include "attrib/embedding.hpp"
#include "attrib/features.hpp"
#include "attrib/forest.hpp"

#include "json.hpp"

namespace attrib {

// Quartiles under the inclusive linear-interpolation convention:
// q(p) sits at rank (n-1)*p of the sorted values.
struct SummaryStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

SummaryStats summarize(std::vector<double> values);

double quantile(std::vector<double> values, double p);

using ConfusionCounts = std::array<std::array<std::int64_t, 3>, 3>;
using ConfusionMatrix = std::array<std::array<double, 3>, 3>;

// Row-normalized (true-class rows sum to 1).  A zero row is fatal.
ConfusionMatrix confusion_matrix_normalized(const ConfusionCounts& counts);

struct RunMetrics {
    int run_id = 0;
    std::uint64_t seed = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    ConfusionCounts test_confusion{};
};

struct ExperimentSummary {
    std::string name;
    std::vector<RunMetrics> runs;
    SummaryStats train_stats;  // over per-run accuracies, percent
    SummaryStats test_stats;
    ConfusionMatrix mean_confusion{};  // mean of row-normalized test matrices

    nlohmann::json to_json() const;
};

struct PreAttributionOptions {
    ForestParams forest;  // per-run seeds are derived; the seed field is moot
    int runs = 30;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;
    std::string name = "pre_attribution";
};

// The 30-run protocol: run r re-splits with seed base_seed + r, refits the
// n-gram models on that run's training texts, trains a balanced forest, and
// scores both splits.  Any failed run aborts the experiment.
ExperimentSummary run_pre_attribution_experiment(
    const LabeledCorpus& corpus, const Lexicons& lex,
    const PreAttributionOptions& opt);

struct AttributionOptions {
    AttributionMethod method = AttributionMethod::ClosestTwo;
    bool pre_attribution = true;
    // Route on gold classes instead of a trained classifier.
    bool oracle_labels = false;
    ForestParams forest;
    int runs = 30;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;
    std::string name = "attribution";
};

// End-to-end attribution accuracy under the judge.  Runs share split seeds
// with the pre-attribution protocol, so on/off variants of the same run index
// see identical test sets.  With pre-attribution off the method is applied to
// every sentence, so gold-empty sentences are unconditionally wrong.
ExperimentSummary run_attribution_experiment(const LabeledCorpus& corpus,
                                             const Lexicons& lex,
                                             EmbeddingProvider& provider,
                                             const AttributionOptions& opt);

// Two-sided exact Wilcoxon signed-rank test on paired samples.  Zero
// differences are dropped; if none remain the result is 1.0.
double significance_test(const std::vector<double>& a,
                         const std::vector<double>& b);

// Deterministic oracle corpus for attribution experiments.  Every sample gets
// `quotes_per_sample` quotes over pairwise-disjoint vocabularies plus three
// sentences: a Zero sentence over its own vocabulary, a One sentence that is
// a perturbed copy of a single quote, and a Multi sentence interleaving
// exactly two quotes.  Gold refs follow that construction.
std::vector<QuerySample> generate_synthetic_samples(std::uint64_t seed,
                                                    int n_samples,
                                                    int quotes_per_sample);

}  // namespace attrib
