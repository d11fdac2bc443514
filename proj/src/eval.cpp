#include "attrib/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "attrib/rng.hpp"

namespace attrib {

using nlohmann::json;

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw FatalError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw FatalError("quantile p outside [0,1]");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

SummaryStats summarize(std::vector<double> values) {
    SummaryStats s;
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    return s;
}

ConfusionMatrix confusion_matrix_normalized(const ConfusionCounts& counts) {
    ConfusionMatrix out{};
    for (int r = 0; r < 3; ++r) {
        std::int64_t row = 0;
        for (int c = 0; c < 3; ++c) {
            if (counts[r][c] < 0)
                throw FatalError("negative confusion count");
            row += counts[r][c];
        }
        if (row == 0)
            throw FatalError(std::string("confusion row for class '") +
                             to_string(static_cast<RefClass>(r)) +
                             "' is empty");
        for (int c = 0; c < 3; ++c)
            out[r][c] = static_cast<double>(counts[r][c]) /
                        static_cast<double>(row);
    }
    return out;
}

namespace {

json stats_to_json(const SummaryStats& s) {
    return json{{"median", s.median}, {"q1", s.q1}, {"q3", s.q3}};
}

json confusion_to_json(const ConfusionMatrix& m) {
    json rows = json::array();
    for (const auto& r : m) rows.push_back(json(r));
    return rows;
}

struct RunAggregate {
    SummaryStats train;
    SummaryStats test;
    ConfusionMatrix mean_confusion{};
};

RunAggregate aggregate_runs(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw FatalError("experiment produced no runs");
    std::vector<double> train, test;
    ConfusionMatrix mean{};
    for (const auto& r : runs) {
        train.push_back(100.0 * r.train_accuracy);
        test.push_back(100.0 * r.test_accuracy);
        ConfusionMatrix norm = confusion_matrix_normalized(r.test_confusion);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) mean[i][j] += norm[i][j];
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            mean[i][j] /= static_cast<double>(runs.size());
    RunAggregate agg;
    agg.train = summarize(train);
    agg.test = summarize(test);
    agg.mean_confusion = mean;
    return agg;
}

// Per-run feature assembly over cached split-independent columns: the n-gram
// models are refit on the run's training texts only.
struct FeatureBank {
    std::vector<FeatureVector> base;
    std::vector<RefClass> labels;
    std::vector<const std::string*> texts;

    FeatureBank(const LabeledCorpus& corpus, const Lexicons& lex) {
        const auto& entries = corpus.sentences();
        base.reserve(entries.size());
        labels.reserve(entries.size());
        texts.reserve(entries.size());
        for (const auto& e : entries) {
            base.push_back(extract_base_features(e.sentence.text, lex));
            labels.push_back(e.sentence.ref_class);
            texts.push_back(&e.sentence.text);
        }
    }

    struct RunView {
        std::vector<FeatureVector> features;  // indexed like the corpus
        NgramModel bigram;
        NgramModel trigram;
    };

    RunView materialize(const std::vector<std::size_t>& train_idx) const {
        std::vector<std::string> train_texts;
        train_texts.reserve(train_idx.size());
        for (std::size_t i : train_idx) train_texts.push_back(*texts[i]);
        RunView view;
        view.bigram = NgramModel::fit(train_texts, 2);
        view.trigram = NgramModel::fit(train_texts, 3);
        view.features = base;
        for (std::size_t i = 0; i < view.features.size(); ++i)
            add_ngram_features(view.features[i], *texts[i], view.bigram,
                               view.trigram);
        return view;
    }
};

std::vector<FeatureVector> gather(const std::vector<FeatureVector>& all,
                                  const std::vector<std::size_t>& idx) {
    std::vector<FeatureVector> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

std::vector<RefClass> gather_labels(const std::vector<RefClass>& all,
                                    const std::vector<std::size_t>& idx) {
    std::vector<RefClass> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

}  // namespace

ExperimentSummary run_pre_attribution_experiment(
    const LabeledCorpus& corpus, const Lexicons& lex,
    const PreAttributionOptions& opt) {
    if (opt.runs < 1) throw FatalError("experiment needs at least one run");
    FeatureBank bank(corpus, lex);

    ExperimentSummary summary;
    summary.name = opt.name;
    for (int r = 0; r < opt.runs; ++r) {
        std::uint64_t seed = opt.base_seed + static_cast<std::uint64_t>(r);
        auto [train_idx, test_idx] =
            stratified_split_indices(corpus, opt.train_fraction, seed);
        auto view = bank.materialize(train_idx);

        ForestParams params = opt.forest;
        params.seed = seed;
        ForestModel model =
            fit_forest(gather(view.features, train_idx),
                       gather_labels(bank.labels, train_idx), params);

        RunMetrics m;
        m.run_id = r;
        m.seed = seed;
        std::size_t hits = 0;
        for (std::size_t i : train_idx)
            if (model.predict(view.features[i]) == bank.labels[i]) ++hits;
        m.train_accuracy =
            static_cast<double>(hits) / static_cast<double>(train_idx.size());
        hits = 0;
        for (std::size_t i : test_idx) {
            RefClass pred = model.predict(view.features[i]);
            if (pred == bank.labels[i]) ++hits;
            m.test_confusion[static_cast<int>(bank.labels[i])]
                            [static_cast<int>(pred)]++;
        }
        m.test_accuracy =
            static_cast<double>(hits) / static_cast<double>(test_idx.size());
        summary.runs.push_back(std::move(m));
    }

    RunAggregate agg = aggregate_runs(summary.runs);
    summary.train_stats = agg.train;
    summary.test_stats = agg.test;
    summary.mean_confusion = agg.mean_confusion;
    return summary;
}

ExperimentSummary run_attribution_experiment(const LabeledCorpus& corpus,
                                             const Lexicons& lex,
                                             EmbeddingProvider& provider,
                                             const AttributionOptions& opt) {
    if (opt.runs < 1) throw FatalError("experiment needs at least one run");
    if (opt.method == AttributionMethod::Skipped)
        throw FatalError("attribution experiments need a real method");

    const auto& entries = corpus.sentences();
    // Sentence and quote embeddings depend only on the corpus; compute once.
    std::vector<EmbeddingVector> sentence_vecs;
    sentence_vecs.reserve(entries.size());
    {
        std::vector<std::string> texts;
        texts.reserve(entries.size());
        for (const auto& e : entries) texts.push_back(e.sentence.text);
        sentence_vecs = provider.embed_batch(texts);
    }
    std::map<int, std::vector<EmbeddingVector>> quote_vecs;
    for (const auto& e : entries) {
        if (quote_vecs.count(e.sample_index)) continue;
        const auto& quotes = corpus.samples()[e.sample_index].quotes;
        std::vector<std::string> texts;
        texts.reserve(quotes.size());
        for (const auto& q : quotes) texts.push_back(q.text);
        quote_vecs.emplace(e.sample_index, provider.embed_batch(texts));
    }

    const bool trains_forest = opt.pre_attribution && !opt.oracle_labels;
    FeatureBank bank(corpus, lex);

    auto routed_class = [&](RefClass predicted) -> RefClass {
        if (!opt.pre_attribution)
            return opt.method == AttributionMethod::ClosestOne
                       ? RefClass::One
                       : RefClass::Multi;
        if (predicted == RefClass::Multi &&
            opt.method == AttributionMethod::ClosestOne)
            return RefClass::One;
        return predicted;
    };

    auto judge_index = [&](std::size_t i, RefClass cls) {
        const auto& entry = entries[i];
        auto result = attribute_by_class(cls, sentence_vecs[i],
                                         quote_vecs.at(entry.sample_index));
        return judge_attribution(result.refs, entry.sentence.refs);
    };

    ExperimentSummary summary;
    summary.name = opt.name;
    for (int r = 0; r < opt.runs; ++r) {
        std::uint64_t seed = opt.base_seed + static_cast<std::uint64_t>(r);
        auto [train_idx, test_idx] =
            stratified_split_indices(corpus, opt.train_fraction, seed);

        ForestModel model;
        FeatureBank::RunView view;
        if (trains_forest) {
            view = bank.materialize(train_idx);
            ForestParams params = opt.forest;
            params.seed = seed;
            model = fit_forest(gather(view.features, train_idx),
                               gather_labels(bank.labels, train_idx), params);
        }

        auto predicted_class = [&](std::size_t i) -> RefClass {
            if (!opt.pre_attribution) return RefClass::One;  // unused
            if (opt.oracle_labels) return bank.labels[i];
            return model.predict(view.features[i]);
        };

        RunMetrics m;
        m.run_id = r;
        m.seed = seed;
        std::size_t hits = 0;
        for (std::size_t i : train_idx) {
            RefClass cls = routed_class(predicted_class(i));
            if (judge_index(i, cls)) ++hits;
        }
        m.train_accuracy =
            static_cast<double>(hits) / static_cast<double>(train_idx.size());
        hits = 0;
        for (std::size_t i : test_idx) {
            RefClass pred = opt.pre_attribution
                                ? predicted_class(i)
                                : routed_class(RefClass::One);
            RefClass cls = routed_class(pred);
            if (judge_index(i, cls)) ++hits;
            m.test_confusion[static_cast<int>(bank.labels[i])]
                            [static_cast<int>(pred)]++;
        }
        m.test_accuracy =
            static_cast<double>(hits) / static_cast<double>(test_idx.size());
        summary.runs.push_back(std::move(m));
    }

    RunAggregate agg = aggregate_runs(summary.runs);
    summary.train_stats = agg.train;
    summary.test_stats = agg.test;
    summary.mean_confusion = agg.mean_confusion;
    return summary;
}

double significance_test(const std::vector<double>& a,
                         const std::vector<double>& b) {
    if (a.size() != b.size())
        throw FatalError("paired significance test needs equal-length samples");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = b[i] - a[i];
        if (std::abs(d) > 1e-12) diffs.push_back(d);
    }
    std::size_t n = diffs.size();
    if (n == 0) return 1.0;

    std::sort(diffs.begin(), diffs.end(),
              [](double x, double y) { return std::abs(x) < std::abs(y); });
    // doubled average ranks stay integral, so the exact distribution is a DP
    // over integer sums
    std::vector<long long> rank2(n);
    std::vector<bool> positive(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && std::abs(std::abs(diffs[j]) - std::abs(diffs[i])) <=
                            1e-12)
            ++j;
        long long sum2 = 0;  // twice the sum of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            sum2 += 2 * (static_cast<long long>(k) + 1);
        long long avg2 = sum2 / static_cast<long long>(j - i);
        for (std::size_t k = i; k < j; ++k) {
            rank2[k] = avg2;
            positive[k] = diffs[k] > 0;
        }
        i = j;
    }

    long long total = 0;
    long long observed2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        total += rank2[k];
        if (positive[k]) observed2 += rank2[k];
    }

    if (n > 200) {
        // normal approximation for absurdly long series; exact elsewhere
        double w = static_cast<double>(observed2) / 2.0;
        double nn = static_cast<double>(n);
        double mean = nn * (nn + 1.0) / 4.0;
        double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
        double z = (w - mean) / std::sqrt(var);
        double p = std::erfc(std::abs(z) / std::sqrt(2.0));
        return std::min(1.0, p);
    }

    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k)
        for (long long s = total; s >= rank2[k]; --s)
            ways[static_cast<std::size_t>(s)] +=
                ways[static_cast<std::size_t>(s - rank2[k])];

    double denom = std::ldexp(1.0, static_cast<int>(n));
    double p_le = 0.0, p_ge = 0.0;
    for (long long s = 0; s <= total; ++s) {
        if (s <= observed2) p_le += ways[static_cast<std::size_t>(s)];
        if (s >= observed2) p_ge += ways[static_cast<std::size_t>(s)];
    }
    p_le /= denom;
    p_ge /= denom;
    return std::min(1.0, 2.0 * std::min(p_le, p_ge));
}

std::vector<QuerySample> generate_synthetic_samples(std::uint64_t seed,
                                                    int n_samples,
                                                    int quotes_per_sample) {
    if (n_samples < 1) throw FatalError("need at least one synthetic sample");
    if (quotes_per_sample < 3)
        throw FatalError("synthetic samples need at least three quotes");

    static const char* kConsonants = "bcdfghjklmnpqrstvwz";
    static const char* kVowels = "aeiou";
    std::vector<std::string> all_syllables;
    for (const char* c = kConsonants; *c; ++c)
        for (const char* v = kVowels; *v; ++v)
            all_syllables.push_back(std::string{*c, *v});

    constexpr int kSyllablesPerSet = 6;
    int sets_needed = quotes_per_sample + 1;
    if (static_cast<std::size_t>(sets_needed) * kSyllablesPerSet >
        all_syllables.size())
        throw FatalError("too many quotes per sample for disjoint vocabularies");

    std::vector<QuerySample> samples;
    samples.reserve(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        Rng rng(Rng::mix(seed) ^ Rng::mix(static_cast<std::uint64_t>(s) + 1));
        std::vector<std::string> pool = all_syllables;
        rng.shuffle(pool);

        // one disjoint syllable set per quote plus one for the Zero sentence
        std::vector<std::vector<std::string>> sets(
            static_cast<std::size_t>(sets_needed));
        for (int k = 0; k < sets_needed; ++k)
            sets[k].assign(
                pool.begin() + static_cast<long>(k) * kSyllablesPerSet,
                pool.begin() + static_cast<long>(k + 1) * kSyllablesPerSet);

        auto token = [&](const std::vector<std::string>& set) {
            return set[rng.next_below(set.size())] +
                   set[rng.next_below(set.size())];
        };
        auto render = [](const std::vector<std::string>& tokens) {
            std::string out;
            for (const auto& t : tokens) {
                if (!out.empty()) out += ' ';
                out += t;
            }
            out += '.';
            return out;
        };

        QuerySample sample;
        sample.id = "syn-" + std::to_string(s);
        sample.query = "synthetic query " + std::to_string(s);

        std::vector<std::vector<std::string>> quote_tokens(
            static_cast<std::size_t>(quotes_per_sample));
        for (int q = 0; q < quotes_per_sample; ++q) {
            for (int w = 0; w < 8; ++w)
                quote_tokens[q].push_back(token(sets[q]));
            sample.quotes.push_back({q + 1, render(quote_tokens[q])});
        }

        std::vector<std::string> zero_tokens;
        for (int w = 0; w < 5; ++w) zero_tokens.push_back(token(sets.back()));

        int g = static_cast<int>(rng.next_below(quotes_per_sample));
        std::vector<std::string> one_tokens = quote_tokens[g];
        std::size_t slot = rng.next_below(one_tokens.size());
        std::string repl = token(sets[g]);
        while (repl == one_tokens[slot]) repl = token(sets[g]);
        one_tokens[slot] = repl;

        int qa = static_cast<int>(rng.next_below(quotes_per_sample));
        int qb = static_cast<int>(rng.next_below(quotes_per_sample));
        while (qb == qa)
            qb = static_cast<int>(rng.next_below(quotes_per_sample));
        std::vector<std::string> multi_tokens;
        for (int w = 0; w < 5; ++w) {
            multi_tokens.push_back(quote_tokens[qa][w]);
            if (w < 4) multi_tokens.push_back(quote_tokens[qb][w]);
        }

        auto make = [&](std::vector<std::string> tokens,
                        std::vector<int> refs) {
            LabeledSentence sent;
            sent.text = render(tokens);
            std::sort(refs.begin(), refs.end());
            sent.refs = std::move(refs);
            sent.origin = LabelOrigin::Dataset;
            sent.ref_class = assign_ref_class(sent, std::nullopt);
            return sent;
        };

        sample.answers.push_back({make(zero_tokens, {}),
                                  make(one_tokens, {g + 1}),
                                  make(multi_tokens, {qa + 1, qb + 1})});
        samples.push_back(std::move(sample));
    }
    return samples;
}

json ExperimentSummary::to_json() const {
    json j;
    j["name"] = name;
    j["train"] = stats_to_json(train_stats);
    j["test"] = stats_to_json(test_stats);
    j["mean_confusion"] = confusion_to_json(mean_confusion);
    json rs = json::array();
    for (const auto& r : runs) {
        json rr;
        rr["run_id"] = r.run_id;
        rr["seed"] = r.seed;
        rr["train_accuracy"] = r.train_accuracy;
        rr["test_accuracy"] = r.test_accuracy;
        json conf = json::array();
        for (const auto& row : r.test_confusion) conf.push_back(json(row));
        rr["test_confusion"] = conf;
        rs.push_back(rr);
    }
    j["runs"] = rs;
    return j;
}

}  // namespace attrib
