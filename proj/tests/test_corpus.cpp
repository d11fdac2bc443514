#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "attrib/corpus.hpp"
#include "attrib/rng.hpp"
#include "json.hpp"

using namespace attrib;

namespace {

std::vector<int> csv_refs(const std::string& field) {
    std::vector<int> refs;
    if (field == "-") return refs;
    std::istringstream in(field);
    std::string tok;
    while (std::getline(in, tok, ',')) refs.push_back(std::stoi(tok));
    return refs;
}

QuerySample make_sample(std::string id,
                        std::vector<std::pair<std::string, std::vector<int>>>
                            sentences) {
    QuerySample s;
    s.id = std::move(id);
    s.query = "q";
    for (int i = 1; i <= 20; ++i) s.quotes.push_back({i, "quote"});
    s.answers.emplace_back();
    for (auto& [text, refs] : sentences) {
        LabeledSentence ls;
        ls.text = text;
        ls.refs = refs;
        ls.ref_class = assign_ref_class(ls, std::nullopt);
        s.answers.back().push_back(std::move(ls));
    }
    return s;
}

}  // namespace

TEST_CASE("marker parsing matches the golden catalogue") {
    std::ifstream in(std::string(ATTRIB_TEST_DATA_DIR) +
                     "/markers_golden.tsv");
    REQUIRE(in.good());
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string raw, clean, refs_field, warn_field;
        REQUIRE(std::getline(row, raw, '\t'));
        REQUIRE(std::getline(row, clean, '\t'));
        REQUIRE(std::getline(row, refs_field, '\t'));
        REQUIRE(std::getline(row, warn_field));

        CAPTURE(raw);
        MarkerParse p = parse_reference_markers(raw);
        CHECK(p.clean_text == clean);
        CHECK(p.refs == csv_refs(refs_field));
        CHECK(p.warnings.size() == std::stoul(warn_field));
        ++checked;
    }
    CHECK(checked >= 35);
}

TEST_CASE("render/parse round-trips on random sentences") {
    static const char* kWords[] = {"the", "reaction", "yields", "heat",
                                   "alloys", "resist", "corrosion", "under",
                                   "pressure", "notably", "despite", "cooling"};
    Rng rng(20240817);
    for (int it = 0; it < 2000; ++it) {
        std::string clean;
        int n_words = rng.next_int(1, 10);
        for (int w = 0; w < n_words; ++w) {
            if (w) clean.push_back(' ');
            clean += kWords[rng.next_below(12)];
        }
        clean.push_back('.');

        std::vector<int> refs;
        int n_refs = rng.next_int(0, 4);
        while (static_cast<int>(refs.size()) < n_refs) {
            int r = rng.next_int(1, 15);
            if (std::find(refs.begin(), refs.end(), r) == refs.end())
                refs.push_back(r);
        }
        std::sort(refs.begin(), refs.end());

        MarkerParse p = parse_reference_markers(render_with_marker(clean, refs));
        CAPTURE(render_with_marker(clean, refs));
        CHECK(p.clean_text == clean);
        CHECK(p.refs == refs);
        CHECK(p.warnings.empty());
    }
}

TEST_CASE("whitespace is normalized after stripping") {
    MarkerParse p =
        parse_reference_markers("  Tabs\tand  doubles [2]\t, then more [3] .");
    CHECK(p.clean_text == "Tabs and doubles, then more.");
    CHECK(p.refs == std::vector<int>{2, 3});
}

static const char* kRawDataset = R"JSON([
  {"id": "s1", "query": "why is the sky blue?",
   "quotes": ["Rayleigh scattering favours short wavelengths.",
              "Sunlight contains every visible colour."],
   "answers": [["The sky is blue [1].",
                "Light scatters [1][2].",
                "The sky is blue [1]."],
               ["The sky is blue [2].",
                "No citation appears here."]]}
])JSON";

TEST_CASE("raw dataset loading, counts, and dedup") {
    std::istringstream in(kRawDataset);
    Warnings warnings;
    auto samples = load_samples(in, DatasetSchema::Hagrid, &warnings);
    REQUIRE(samples.size() == 1);
    CHECK(warnings.empty());
    CHECK(sentence_count(samples) == 5);

    auto raw = raw_class_counts(samples);
    CHECK(raw[0] == 1);  // zero
    CHECK(raw[1] == 3);  // one
    CHECK(raw[2] == 1);  // multi

    LabeledCorpus corpus = normalize_and_dedupe(samples);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.sentences()[0].sentence.text == "The sky is blue.");
    CHECK(corpus.sentences()[0].sentence.refs == std::vector<int>{1, 2});
    CHECK(corpus.sentences()[0].sentence.ref_class == RefClass::Multi);
    CHECK(corpus.class_counts()[0] == 1);
    CHECK(corpus.class_counts()[1] == 0);
    CHECK(corpus.class_counts()[2] == 2);

    // idempotence: rebuild one-answer samples from the merged view
    std::vector<QuerySample> again = corpus.samples();
    for (auto& s : again) s.answers.assign(1, {});
    for (const auto& e : corpus.sentences())
        again[e.sample_index].answers[0].push_back(e.sentence);
    LabeledCorpus corpus2 = normalize_and_dedupe(std::move(again));
    REQUIRE(corpus2.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(corpus2.sentences()[i].sentence.text ==
              corpus.sentences()[i].sentence.text);
        CHECK(corpus2.sentences()[i].sentence.refs ==
              corpus.sentences()[i].sentence.refs);
        CHECK(corpus2.sentences()[i].sentence.ref_class ==
              corpus.sentences()[i].sentence.ref_class);
    }
}

TEST_CASE("jsonl input is accepted and record errors name the line") {
    std::istringstream ok(
        "{\"query\":\"q\",\"quotes\":[\"a\"],\"answers\":[[\"x [1].\"]]}\n"
        "{\"query\":\"r\",\"quotes\":[\"b\"],\"answers\":[[\"y.\"]]}\n");
    auto samples = load_samples(ok, DatasetSchema::Hagrid);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].id == "rec0");
    CHECK(samples[1].id == "rec1");

    std::istringstream bad(
        "{\"query\":\"q\",\"quotes\":[\"a\"],\"answers\":[[\"x.\"]]}\n"
        "{\"query\":42,\"quotes\":[\"a\"],\"answers\":[[\"x.\"]]}\n");
    CHECK_THROWS_WITH_AS(load_samples(bad, DatasetSchema::Hagrid),
                         doctest::Contains("record 1"), FatalError);

    std::istringstream broken("{not json\n");
    CHECK_THROWS_AS(load_samples(broken, DatasetSchema::Hagrid), FatalError);

    std::istringstream no_quotes("{\"query\":\"q\",\"answers\":[]}");
    CHECK_THROWS_WITH_AS(load_samples(no_quotes, DatasetSchema::Hagrid),
                         doctest::Contains("quotes"), FatalError);
}

TEST_CASE("out-of-range citations are dropped with a warning") {
    std::istringstream in(
        "{\"query\":\"q\",\"quotes\":[\"a\",\"b\"],"
        "\"answers\":[[\"Cites beyond [5].\",\"Fine [2].\"]]}");
    Warnings warnings;
    auto samples = load_samples(in, DatasetSchema::Hagrid, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings.items()[0].find("quote 5") != std::string::npos);
    CHECK(samples[0].answers[0][0].refs.empty());
    CHECK(samples[0].answers[0][0].ref_class == RefClass::Zero);
    CHECK(samples[0].answers[0][1].refs == std::vector<int>{2});
}

TEST_CASE("quote-count expectations differ per source") {
    std::string many = "{\"query\":\"q\",\"quotes\":[";
    for (int i = 0; i < 13; ++i) many += std::string(i ? "," : "") + "\"t\"";
    many += "],\"answers\":[[\"x.\"]]}";

    {
        std::istringstream in(many);
        Warnings w;
        load_samples(in, DatasetSchema::Hagrid, &w);
        REQUIRE(w.size() == 1);
        CHECK(w.items()[0].find("expected 1-12") != std::string::npos);
    }
    {
        std::istringstream in(
            "{\"query\":\"q\",\"quotes\":[\"a\",\"b\"],\"answers\":[[\"x.\"]]}");
        Warnings w;
        load_samples(in, DatasetSchema::WebglmQa, &w);
        REQUIRE(w.size() == 1);
        CHECK(w.items()[0].find("expected 3-5") != std::string::npos);
    }
}

TEST_CASE("cleaned schema carries label overrides") {
    std::istringstream in(R"JSON([
      {"id": "c1", "query": "q", "quotes": ["a", "b"],
       "answers": [[
         {"text": "Alpha fact.", "refs": [1], "label": "one"},
         {"text": "Broken fragment", "refs": [], "label": "invalid"},
         {"text": "Joint claim.", "refs": [2, 1], "label": "multi"}]]}
    ])JSON");
    auto samples = load_samples(in, DatasetSchema::HagridClean);
    const auto& sentences = samples[0].answers[0];
    REQUIRE(sentences.size() == 3);
    CHECK(sentences[0].ref_class == RefClass::One);
    CHECK(sentences[0].origin == LabelOrigin::CleanedOverride);
    CHECK_FALSE(sentences[0].invalid);
    CHECK(sentences[1].ref_class == RefClass::Zero);
    CHECK(sentences[1].invalid);
    CHECK(sentences[2].refs == std::vector<int>{1, 2});
    CHECK(sentences[2].ref_class == RefClass::Multi);
}

TEST_CASE("label sidecar rewrites matching sentences") {
    std::istringstream in(kRawDataset);
    auto samples = load_samples(in, DatasetSchema::Hagrid);

    auto path = std::filesystem::temp_directory_path() /
                "attrib_test_sidecar.jsonl";
    {
        std::ofstream out(path);
        out << R"({"sample_id":"s1","text":"The sky is blue.","label":"multi"})"
            << "\n"
            << R"({"sample_id":"s1","text":"Nowhere.","label":"zero"})" << "\n";
    }
    Warnings warnings;
    apply_label_sidecar(samples, path.string(), &warnings);
    std::filesystem::remove(path);

    REQUIRE(warnings.size() == 1);  // the unmatched row
    CHECK(samples[0].answers[0][0].ref_class == RefClass::Multi);
    CHECK(samples[0].answers[0][0].origin == LabelOrigin::CleanedOverride);
    CHECK(samples[0].answers[1][0].ref_class == RefClass::Multi);

    // an override survives dedup even when |refs| disagrees
    LabeledCorpus corpus = normalize_and_dedupe(std::move(samples));
    CHECK(corpus.sentences()[0].sentence.ref_class == RefClass::Multi);
    CHECK(corpus.sentences()[0].sentence.origin ==
          LabelOrigin::CleanedOverride);
}

TEST_CASE("assign_ref_class override table") {
    LabeledSentence s;
    CHECK(assign_ref_class(s, std::nullopt) == RefClass::Zero);
    s.refs = {4};
    CHECK(assign_ref_class(s, std::nullopt) == RefClass::One);
    s.refs = {4, 9};
    CHECK(assign_ref_class(s, std::nullopt) == RefClass::Multi);
    CHECK(assign_ref_class(s, std::string("zero")) == RefClass::Zero);
    CHECK(assign_ref_class(s, std::string("invalid")) == RefClass::Zero);
    CHECK(assign_ref_class(s, std::string("one")) == RefClass::One);
    CHECK(assign_ref_class(s, std::string("multi")) == RefClass::Multi);
    CHECK_THROWS_AS(assign_ref_class(s, std::string("some")), FatalError);
}

TEST_CASE("stratified split keeps ratios, disjointness, determinism") {
    std::vector<QuerySample> samples;
    auto add = [&](int count, int n_refs) {
        for (int i = 0; i < count; ++i) {
            std::vector<int> refs;
            for (int r = 1; r <= n_refs; ++r) refs.push_back(r);
            std::string text = "sentence " + std::to_string(samples.size());
            samples.push_back(make_sample("s" + std::to_string(samples.size()),
                                          {{text, refs}}));
        }
    };
    add(10, 0);
    add(30, 1);
    add(20, 2);
    LabeledCorpus corpus = normalize_and_dedupe(std::move(samples));
    REQUIRE(corpus.size() == 60);

    auto [train, test] = stratified_split(corpus, 0.7, 99);
    CHECK(train.class_counts() == std::array<std::int64_t, 3>{7, 21, 14});
    CHECK(test.class_counts() == std::array<std::int64_t, 3>{3, 9, 6});

    std::set<std::string> seen;
    for (const auto& e : train.sentences()) seen.insert(e.sentence.text);
    for (const auto& e : test.sentences()) {
        CHECK(seen.insert(e.sentence.text).second);  // disjoint
    }
    CHECK(seen.size() == 60);  // covering

    auto [train2, test2] = stratified_split(corpus, 0.7, 99);
    for (std::size_t i = 0; i < train.size(); ++i)
        CHECK(train2.sentences()[i].sentence.text ==
              train.sentences()[i].sentence.text);

    auto [train3, test3] = stratified_split(corpus, 0.7, 100);
    bool differs = false;
    for (std::size_t i = 0; i < train.size() && !differs; ++i)
        differs = train3.sentences()[i].sentence.text !=
                  train.sentences()[i].sentence.text;
    CHECK(differs);
}

TEST_CASE("split rejects classes that cannot stratify") {
    std::vector<QuerySample> samples;
    samples.push_back(make_sample("a", {{"only zero.", {}}}));
    samples.push_back(make_sample("b", {{"one one.", {1}}}));
    samples.push_back(make_sample("c", {{"two one.", {2}}}));
    samples.push_back(make_sample("d", {{"a multi.", {1, 2}}}));
    samples.push_back(make_sample("e", {{"b multi.", {1, 3}}}));
    LabeledCorpus corpus = normalize_and_dedupe(std::move(samples));
    CHECK_THROWS_WITH_AS(stratified_split(corpus, 0.7, 1),
                         doctest::Contains("zero"), FatalError);
    CHECK_THROWS_AS(stratified_split(LabeledCorpus{}, 0.7, 1), FatalError);
}

TEST_CASE("corpus jsonl export is stable and well-formed") {
    std::istringstream in(kRawDataset);
    auto samples = load_samples(in, DatasetSchema::Hagrid);
    LabeledCorpus corpus = normalize_and_dedupe(std::move(samples));

    std::ostringstream out1, out2;
    write_corpus_jsonl(corpus, out1);
    write_corpus_jsonl(corpus, out2);
    CHECK(out1.str() == out2.str());

    std::istringstream lines(out1.str());
    std::string line;
    int n = 0, expected_id = 0;
    while (std::getline(lines, line)) {
        auto rec = nlohmann::json::parse(line);
        CHECK(rec["sample_id"] == "s1");
        CHECK(rec["sentence_id"] == expected_id++);
        CHECK(rec["text"].is_string());
        CHECK(rec["refs"].is_array());
        std::string label = rec["label"];
        CHECK((label == "zero" || label == "one" || label == "multi"));
        ++n;
    }
    CHECK(n == 3);
}
