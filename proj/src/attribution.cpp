#include "attrib/attribution.hpp"

#include <algorithm>
#include <cmath>

namespace attrib {

std::string to_string(AttributionMethod m) {
    switch (m) {
        case AttributionMethod::Skipped: return "skipped";
        case AttributionMethod::ClosestOne: return "closest_one";
        case AttributionMethod::ClosestTwo: return "closest_two";
    }
    throw FatalError("unknown attribution method");
}

AttributionResult attribute_closest(
    const EmbeddingVector& sentence,
    const std::vector<EmbeddingVector>& quotes) {
    if (quotes.empty())
        throw FatalError("attribution requires at least one quote");
    std::size_t best = 0;
    double best_d = cosine_distance(sentence, quotes[0]);
    for (std::size_t i = 1; i < quotes.size(); ++i) {
        double d = cosine_distance(sentence, quotes[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    AttributionResult r;
    r.refs = {static_cast<int>(best) + 1};
    r.method = AttributionMethod::ClosestOne;
    r.distance = best_d;
    return r;
}

namespace {

// true when a's ref list should win a distance tie against b's
bool prefer_refs(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

}  // namespace

AttributionResult attribute_closest_pair(
    const EmbeddingVector& sentence,
    const std::vector<EmbeddingVector>& quotes, Warnings* warnings) {
    if (quotes.empty())
        throw FatalError("attribution requires at least one quote");
    if (quotes.size() < 2) {
        warn(warnings,
             "fewer than two quotes available; falling back to closest-quote "
             "attribution");
        return attribute_closest(sentence, quotes);
    }

    AttributionResult best;
    bool have = false;
    auto consider = [&](std::vector<int> refs, double d) {
        if (!have || d < best.distance.value() - 1e-15 ||
            (std::abs(d - best.distance.value()) <= 1e-15 &&
             prefer_refs(refs, best.refs))) {
            best.refs = std::move(refs);
            best.distance = d;
            have = true;
        }
    };

    for (std::size_t i = 0; i < quotes.size(); ++i)
        consider({static_cast<int>(i) + 1},
                 cosine_distance(sentence, quotes[i]));

    std::vector<double> mixed(sentence.dim());
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        for (std::size_t j = i + 1; j < quotes.size(); ++j) {
            if (quotes[i].dim() != quotes[j].dim())
                throw FatalError("embedding dimension mismatch among quotes");
            for (std::size_t k = 0; k < mixed.size(); ++k)
                mixed[k] = 0.5 * (quotes[i].values[k] + quotes[j].values[k]);
            EmbeddingVector pair_vec = normalize_embedding(mixed);
            consider({static_cast<int>(i) + 1, static_cast<int>(j) + 1},
                     cosine_distance(sentence, pair_vec));
        }
    }
    best.method = AttributionMethod::ClosestTwo;
    return best;
}

AttributionResult attribute_by_class(
    RefClass cls, const EmbeddingVector& sentence,
    const std::vector<EmbeddingVector>& quotes, Warnings* warnings) {
    switch (cls) {
        case RefClass::Zero: {
            AttributionResult r;
            r.method = AttributionMethod::Skipped;
            return r;
        }
        case RefClass::One: return attribute_closest(sentence, quotes);
        case RefClass::Multi:
            return attribute_closest_pair(sentence, quotes, warnings);
    }
    throw FatalError("unknown reference class");
}

RefClass classify_sentence(const std::string& sentence,
                           const ForestModel& model,
                           const FeatureContext& ctx) {
    if (!ctx.lexicons || !ctx.bigram || !ctx.trigram)
        throw FatalError("feature context is incomplete");
    FeatureVector fv =
        extract_features(sentence, *ctx.bigram, *ctx.trigram, *ctx.lexicons);
    return model.predict(fv);
}

AttributionResult route_and_attribute(
    const std::string& sentence, const std::vector<Quote>& quotes,
    const ForestModel& model, const FeatureContext& ctx,
    EmbeddingProvider& provider, Warnings* warnings) {
    RefClass cls = classify_sentence(sentence, model, ctx);
    if (cls == RefClass::Zero) {
        AttributionResult r;
        r.method = AttributionMethod::Skipped;
        return r;
    }
    if (quotes.empty())
        throw FatalError("attribution requires at least one quote");
    std::vector<std::string> texts;
    texts.reserve(quotes.size() + 1);
    texts.push_back(sentence);
    for (const auto& q : quotes) texts.push_back(q.text);
    auto vecs = provider.embed_batch(texts);
    EmbeddingVector sentence_vec = std::move(vecs[0]);
    std::vector<EmbeddingVector> quote_vecs(
        std::make_move_iterator(vecs.begin() + 1),
        std::make_move_iterator(vecs.end()));
    return attribute_by_class(cls, sentence_vec, quote_vecs, warnings);
}

bool judge_attribution(const std::vector<int>& predicted,
                       const std::vector<int>& gold) {
    if (gold.empty()) return predicted.empty();
    if (gold.size() == 1) return predicted == gold;
    if (predicted.size() < 2) return false;
    return std::includes(gold.begin(), gold.end(), predicted.begin(),
                         predicted.end());
}

}  // namespace attrib
