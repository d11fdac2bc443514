#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/rng.hpp"
#include "doctest.h"

using namespace attrib;

namespace {

EmbeddingVector basis(std::size_t dim, std::size_t axis) {
    std::vector<double> v(dim, 0.0);
    v[axis] = 1.0;
    return normalize_embedding(std::move(v));
}

EmbeddingVector mix(const EmbeddingVector& a, const EmbeddingVector& b) {
    std::vector<double> v(a.dim());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = a.values[i] + b.values[i];
    return normalize_embedding(std::move(v));
}

EmbeddingVector random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.next_double() * 2.0 - 1.0;
    return normalize_embedding(std::move(v));
}

// Independent re-derivation of the candidate scan used to cross-check the
// implementation.  Distances are recomputed from scratch (reverse-order dot
// products) and the same fewer-refs-then-lexicographic tie window applies.
struct OracleBest {
    std::vector<int> refs;
    double distance = 0.0;
    double runner_up_gap = 0.0;
};

double oracle_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    double dot = 0.0;
    for (std::size_t i = a.dim(); i-- > 0;) dot += a.values[i] * b.values[i];
    return std::clamp(1.0 - dot, 0.0, 2.0);
}

OracleBest oracle_scan(const EmbeddingVector& s,
                       const std::vector<EmbeddingVector>& quotes,
                       bool pairs) {
    struct Cand {
        std::vector<int> refs;
        double d;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < quotes.size(); ++i)
        cands.push_back({{int(i) + 1}, oracle_distance(s, quotes[i])});
    if (pairs) {
        for (std::size_t i = 0; i < quotes.size(); ++i)
            for (std::size_t j = i + 1; j < quotes.size(); ++j) {
                std::vector<double> m(s.dim());
                for (std::size_t k = 0; k < m.size(); ++k)
                    m[k] = (quotes[i].values[k] + quotes[j].values[k]) / 2.0;
                cands.push_back({{int(i) + 1, int(j) + 1},
                                 oracle_distance(s, normalize_embedding(m))});
            }
    }
    OracleBest best;
    bool have = false;
    for (auto& c : cands) {
        if (!have || c.d < best.distance - 1e-15 ||
            (std::abs(c.d - best.distance) <= 1e-15 &&
             (c.refs.size() < best.refs.size() ||
              (c.refs.size() == best.refs.size() && c.refs < best.refs)))) {
            best.refs = c.refs;
            best.distance = c.d;
            have = true;
        }
    }
    double runner = 4.0;
    for (auto& c : cands)
        if (c.refs != best.refs) runner = std::min(runner, c.d);
    best.runner_up_gap = runner - best.distance;
    return best;
}

}  // namespace

TEST_CASE("closest quote wins and ties break low") {
    std::vector<EmbeddingVector> quotes = {basis(8, 0), basis(8, 1),
                                           basis(8, 2)};
    EmbeddingVector s = normalize_embedding({0.1, 0.9, 0.1, 0, 0, 0, 0, 0});
    auto r = attribute_closest(s, quotes);
    CHECK(r.refs == std::vector<int>{2});
    CHECK(r.method == AttributionMethod::ClosestOne);
    CHECK(r.distance.value() ==
          doctest::Approx(cosine_distance(s, quotes[1])));

    // identical quotes: the earliest index is reported
    std::vector<EmbeddingVector> dup = {basis(8, 3), basis(8, 3)};
    auto tie = attribute_closest(basis(8, 3), dup);
    CHECK(tie.refs == std::vector<int>{1});
    CHECK(tie.distance.value() <= 1e-12);

    CHECK_THROWS_AS(attribute_closest(s, {}), FatalError);
}

TEST_CASE("closest pair prefers the true mixture") {
    std::vector<EmbeddingVector> quotes = {basis(8, 0), basis(8, 1),
                                           basis(8, 2)};
    EmbeddingVector s = mix(quotes[0], quotes[1]);
    auto r = attribute_closest_pair(s, quotes);
    CHECK(r.refs == std::vector<int>{1, 2});
    CHECK(r.method == AttributionMethod::ClosestTwo);
    CHECK(r.distance.value() <= 1e-12);

    // a sentence aligned with one quote keeps the singleton
    auto single = attribute_closest_pair(basis(8, 2), quotes);
    CHECK(single.refs == std::vector<int>{3});
}

TEST_CASE("pair ties prefer fewer refs then lexicographic order") {
    EmbeddingVector a = basis(8, 0);
    EmbeddingVector b = basis(8, 1);

    // pair {1,2} collapses to quote 1's vector; the singleton must win
    auto fewer = attribute_closest_pair(a, {a, a, b});
    CHECK(fewer.refs == std::vector<int>{1});

    // two pairs at identical distance: {1,2} beats {2,3}
    auto lex = attribute_closest_pair(mix(a, b), {a, b, a});
    CHECK(lex.refs == std::vector<int>{1, 2});
}

TEST_CASE("pair attribution falls back below two quotes") {
    EmbeddingVector s = basis(8, 0);
    Warnings w;
    auto r = attribute_closest_pair(s, {basis(8, 1)}, &w);
    CHECK(r.refs == std::vector<int>{1});
    CHECK(r.method == AttributionMethod::ClosestOne);
    CHECK(w.size() == 1);

    CHECK_THROWS_AS(attribute_closest_pair(s, {}, &w), FatalError);
}

TEST_CASE("pair attribution is order-consistent") {
    Rng rng(0x9a11);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = 2 + rng.next_below(6);
        std::vector<EmbeddingVector> quotes;
        for (std::size_t i = 0; i < n; ++i)
            quotes.push_back(random_unit(rng, 12));
        EmbeddingVector s = random_unit(rng, 12);

        auto fwd = attribute_closest_pair(s, quotes);
        std::vector<EmbeddingVector> rev(quotes.rbegin(), quotes.rend());
        auto bwd = attribute_closest_pair(s, rev);

        CHECK(std::abs(fwd.distance.value() - bwd.distance.value()) <= 1e-12);
        auto oracle = oracle_scan(s, quotes, true);
        if (oracle.runner_up_gap > 1e-9) {
            std::vector<int> mapped;
            for (int ref : bwd.refs) mapped.push_back(int(n) - ref + 1);
            std::sort(mapped.begin(), mapped.end());
            CHECK(mapped == fwd.refs);
        }
    }
}

TEST_CASE("closest and closest-pair match a brute-force scan") {
    Rng rng(0x5ca9);
    int checked_pairs = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng.next_below(12);
        std::vector<EmbeddingVector> quotes;
        for (std::size_t i = 0; i < n; ++i)
            quotes.push_back(random_unit(rng, 16));
        EmbeddingVector s = random_unit(rng, 16);

        auto one = attribute_closest(s, quotes);
        auto one_oracle = oracle_scan(s, quotes, false);
        CHECK(std::abs(one.distance.value() - one_oracle.distance) <= 1e-12);
        if (one_oracle.runner_up_gap > 1e-12)
            CHECK(one.refs == one_oracle.refs);

        if (n >= 2) {
            auto two = attribute_closest_pair(s, quotes);
            auto two_oracle = oracle_scan(s, quotes, true);
            CHECK(std::abs(two.distance.value() - two_oracle.distance) <=
                  1e-12);
            if (two_oracle.runner_up_gap > 1e-12) {
                CHECK(two.refs == two_oracle.refs);
                ++checked_pairs;
            }
        }
    }
    CHECK(checked_pairs > 150);  // the guard must almost never mask the check
}

TEST_CASE("judge truth table") {
    using V = std::vector<int>;
    CHECK(judge_attribution(V{}, V{}));
    CHECK(!judge_attribution(V{1}, V{}));
    CHECK(!judge_attribution(V{}, V{1}));
    CHECK(judge_attribution(V{1}, V{1}));
    CHECK(!judge_attribution(V{2}, V{1}));
    CHECK(!judge_attribution(V{1, 2}, V{1}));
    CHECK(!judge_attribution(V{1}, V{1, 2}));
    CHECK(judge_attribution(V{1, 2}, V{1, 2}));
    CHECK(judge_attribution(V{1, 2}, V{1, 2, 3}));
    CHECK(judge_attribution(V{1, 2, 3}, V{1, 2, 3}));
    CHECK(!judge_attribution(V{1, 2, 4}, V{1, 2, 3}));
    CHECK(!judge_attribution(V{3}, V{1, 2}));
    CHECK(!judge_attribution(V{}, V{1, 2}));
}

TEST_CASE("class routing selects the method") {
    std::vector<EmbeddingVector> quotes = {basis(8, 0), basis(8, 1)};
    EmbeddingVector s = basis(8, 0);

    auto zero = attribute_by_class(RefClass::Zero, s, quotes);
    CHECK(zero.method == AttributionMethod::Skipped);
    CHECK(zero.refs.empty());
    CHECK(!zero.distance.has_value());

    auto one = attribute_by_class(RefClass::One, s, quotes);
    CHECK(one.method == AttributionMethod::ClosestOne);
    CHECK(one.refs == std::vector<int>{1});

    auto multi = attribute_by_class(RefClass::Multi, s, quotes);
    CHECK(multi.method == AttributionMethod::ClosestTwo);
}

namespace {

struct CountingProvider : EmbeddingProvider {
    BuiltinHashProvider inner;
    int calls = 0;

    std::string identity() const override { return "counting"; }
    std::size_t dimension() const override { return inner.dimension(); }
    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override {
        calls += static_cast<int>(texts.size());
        return inner.embed_batch(texts);
    }
};

}  // namespace

TEST_CASE("route_and_attribute classifies, skips, and hits verbatim quotes") {
    Lexicons lex = Lexicons::load_dir(std::string(ATTRIB_DATA_DIR) +
                                      "/lexicons");
    // word-count-separable training corpus: <=2 words Zero, 3-5 One, 6+ Multi
    static const char* kVocab[] = {"river", "stone",  "light", "garden",
                                   "quiet", "signal", "motor", "cloud",
                                   "paper", "delta"};
    std::vector<std::string> texts;
    std::vector<RefClass> labels;
    Rng rng(0x40a7);
    for (int i = 0; i < 90; ++i) {
        RefClass cls = static_cast<RefClass>(i % 3);
        std::size_t len = cls == RefClass::Zero
                              ? 1 + rng.next_below(2)
                              : (cls == RefClass::One ? 3 + rng.next_below(3)
                                                      : 6 + rng.next_below(4));
        std::string t;
        for (std::size_t w = 0; w < len; ++w) {
            if (w) t += ' ';
            t += kVocab[rng.next_below(10)];
        }
        t += '.';
        texts.push_back(t);
        labels.push_back(cls);
    }
    NgramModel bigram = NgramModel::fit(texts, 2);
    NgramModel trigram = NgramModel::fit(texts, 3);
    std::vector<FeatureVector> feats;
    for (const auto& t : texts)
        feats.push_back(extract_features(t, bigram, trigram, lex));
    ForestParams params;
    params.n_trees = 20;
    params.max_depth = 6;
    params.seed = 11;
    ForestModel model = fit_forest(feats, labels, params);

    FeatureContext ctx{&lex, &bigram, &trigram};
    CHECK(classify_sentence("stone river.", model, ctx) == RefClass::Zero);
    CHECK(classify_sentence("stone river light garden.", model, ctx) ==
          RefClass::One);

    std::vector<Quote> quotes = {
        {1, "stone river light garden."},
        {2, "motor cloud paper delta quiet signal."}};

    CountingProvider provider;
    auto zero = route_and_attribute("stone river.", quotes, model, ctx,
                                    provider);
    CHECK(zero.method == AttributionMethod::Skipped);
    CHECK(provider.calls == 0);  // Zero routing must not embed anything

    auto one = route_and_attribute("stone river light garden.", quotes, model,
                                   ctx, provider);
    CHECK(one.method == AttributionMethod::ClosestOne);
    CHECK(one.refs == std::vector<int>{1});
    CHECK(one.distance.value() <= 1e-12);  // verbatim copy of quote 1
    CHECK(provider.calls == 3);

    auto multi = route_and_attribute(
        "motor cloud paper delta quiet signal garden stone.", quotes, model,
        ctx, provider);
    CHECK(multi.method == AttributionMethod::ClosestTwo);
    CHECK(!multi.refs.empty());
}

TEST_CASE("perfect routing never loses to closest alone") {
    // Per instance: empty gold is only satisfied by skipping, singleton gold
    // routes identically, and closest alone can never satisfy a multi gold.
    Rng rng(0xdeed);
    BuiltinHashProvider provider;
    int routed_better = 0;
    for (int trial = 0; trial < 120; ++trial) {
        std::size_t n = 2 + rng.next_below(5);
        std::vector<EmbeddingVector> quotes;
        for (std::size_t i = 0; i < n; ++i)
            quotes.push_back(random_unit(rng, 16));

        std::vector<int> gold;
        RefClass cls;
        int pick = int(rng.next_below(3));
        if (pick == 0) {
            cls = RefClass::Zero;
        } else if (pick == 1) {
            cls = RefClass::One;
            gold = {int(rng.next_below(n)) + 1};
        } else {
            cls = RefClass::Multi;
            int a = int(rng.next_below(n)) + 1;
            int b = int(rng.next_below(n)) + 1;
            while (b == a) b = int(rng.next_below(n)) + 1;
            gold = {std::min(a, b), std::max(a, b)};
        }
        EmbeddingVector s =
            gold.empty()
                ? random_unit(rng, 16)
                : (gold.size() == 1 ? quotes[gold[0] - 1]
                                    : mix(quotes[gold[0] - 1],
                                          quotes[gold[1] - 1]));

        bool routed = judge_attribution(
            attribute_by_class(cls, s, quotes).refs, gold);
        bool plain =
            judge_attribution(attribute_closest(s, quotes).refs, gold);
        CHECK(routed >= plain);
        if (routed && !plain) ++routed_better;
    }
    CHECK(routed_better > 20);
}
