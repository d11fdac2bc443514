#include "attrib/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "attrib/rng.hpp"
#include "json.hpp"

namespace attrib {
namespace {

using nlohmann::json;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Parses a positive integer at s[pos..]; advances pos.  Returns -1 on failure.
long parse_int(const std::string& s, std::size_t& pos) {
    std::size_t start = pos;
    long v = 0;
    while (pos < s.size() && is_digit(s[pos])) {
        v = v * 10 + (s[pos] - '0');
        if (v > 1000000) return -1;
        ++pos;
    }
    if (pos == start) return -1;
    return v;
}

void skip_spaces(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
}

constexpr int kMaxRangeWidth = 1000;

// Body of a bracketed marker: "context N" or a comma/"and"-joined list of
// integers and ranges, optionally with a trailing comma.
bool parse_bracket_body(const std::string& body, std::vector<int>& out) {
    std::size_t pos = 0;
    skip_spaces(body, pos);
    if (body.compare(pos, 7, "context") == 0) {
        pos += 7;
        if (pos >= body.size() || (body[pos] != ' ' && body[pos] != '\t'))
            return false;
        skip_spaces(body, pos);
        long v = parse_int(body, pos);
        if (v < 1) return false;
        skip_spaces(body, pos);
        if (pos != body.size()) return false;
        out.push_back(static_cast<int>(v));
        return true;
    }

    bool expect_item = true;
    bool dangling_comma = false;  // "[1,2,]" is tolerated, "[1 and]" is not
    while (true) {
        skip_spaces(body, pos);
        if (pos == body.size()) {
            if (out.empty()) return false;
            return !expect_item || dangling_comma;
        }
        if (!expect_item) {
            // separator: ',' , "and", or ", and"
            bool seen = false;
            if (body[pos] == ',') {
                ++pos;
                seen = true;
                dangling_comma = true;
                skip_spaces(body, pos);
            }
            if (body.compare(pos, 3, "and") == 0 &&
                (pos + 3 == body.size() || body[pos + 3] == ' ' ||
                 is_digit(body[pos + 3]))) {
                pos += 3;
                seen = true;
                dangling_comma = false;
            }
            if (!seen) return false;
            expect_item = true;
            continue;
        }
        long a = parse_int(body, pos);
        if (a < 1) return false;
        skip_spaces(body, pos);
        if (pos < body.size() && body[pos] == '-') {
            ++pos;
            skip_spaces(body, pos);
            long b = parse_int(body, pos);
            if (b < a || b - a > kMaxRangeWidth) return false;
            for (long v = a; v <= b; ++v) out.push_back(static_cast<int>(v));
        } else {
            out.push_back(static_cast<int>(a));
        }
        expect_item = false;
        dangling_comma = false;
    }
}

// True when everything after `pos` is whitespace or closing punctuation, so a
// "(N)" span counts as sentence-final.
bool only_trailing_punct(const std::string& s, std::size_t pos) {
    for (; pos < s.size(); ++pos) {
        char c = s[pos];
        if (c == ' ' || c == '\t' || c == '.' || c == ',' || c == ';' ||
            c == ':' || c == '!' || c == '?' || c == '"' || c == '\'')
            continue;
        return false;
    }
    return true;
}

std::string tidy_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            // no space before closing punctuation
            if (c != '.' && c != ',' && c != ';' && c != ':' && c != '!' &&
                c != '?')
                out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

void add_unique_sorted(std::vector<int>& refs, const std::vector<int>& more) {
    refs.insert(refs.end(), more.begin(), more.end());
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
}

}  // namespace

RefClass ref_class_from_string(const std::string& s) {
    if (s == "zero") return RefClass::Zero;
    if (s == "one") return RefClass::One;
    if (s == "multi") return RefClass::Multi;
    throw FatalError("unknown reference class '" + s + "'");
}

MarkerParse parse_reference_markers(const std::string& raw) {
    MarkerParse result;
    std::string& out = result.clean_text;
    out.reserve(raw.size());

    std::size_t i = 0;
    while (i < raw.size()) {
        char c = raw[i];
        if (c == '[') {
            std::size_t close = raw.find(']', i + 1);
            if (close != std::string::npos) {
                std::string body = raw.substr(i + 1, close - i - 1);
                std::vector<int> indices;
                if (parse_bracket_body(body, indices)) {
                    add_unique_sorted(result.refs, indices);
                    i = close + 1;
                    continue;
                }
                result.warnings.push_back("unparsed bracketed span '[" + body +
                                          "]'");
            }
            out.push_back(c);
            ++i;
            continue;
        }
        if (c == '(') {
            std::size_t close = raw.find(')', i + 1);
            if (close != std::string::npos) {
                std::size_t pos = i + 1;
                skip_spaces(raw, pos);
                long v = parse_int(raw, pos);
                skip_spaces(raw, pos);
                if (v >= 1 && pos == close && only_trailing_punct(raw, close + 1)) {
                    add_unique_sorted(result.refs, {static_cast<int>(v)});
                    i = close + 1;
                    continue;
                }
            }
            out.push_back(c);
            ++i;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    out = tidy_whitespace(out);
    return result;
}

std::string render_with_marker(const std::string& clean_text,
                               const std::vector<int>& refs) {
    if (refs.empty()) return clean_text;
    std::string out = clean_text + " [";
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (i) out.push_back(',');
        out += std::to_string(refs[i]);
    }
    out.push_back(']');
    return out;
}

// ---------------------------------------------------------------------------

DatasetSchema schema_from_string(const std::string& s) {
    if (s == "hagrid") return DatasetSchema::Hagrid;
    if (s == "webglm_qa" || s == "webglm-qa") return DatasetSchema::WebglmQa;
    if (s == "hagrid_clean" || s == "hagrid-clean")
        return DatasetSchema::HagridClean;
    throw FatalError("unknown dataset schema '" + s + "'");
}

const char* to_string(DatasetSchema s) {
    switch (s) {
        case DatasetSchema::Hagrid: return "hagrid";
        case DatasetSchema::WebglmQa: return "webglm_qa";
        case DatasetSchema::HagridClean: return "hagrid_clean";
    }
    return "?";
}

namespace {

void drop_unknown_refs(LabeledSentence& s, int quote_count,
                       const std::string& where, Warnings* warnings) {
    auto keep_end = std::remove_if(s.refs.begin(), s.refs.end(), [&](int r) {
        if (r >= 1 && r <= quote_count) return false;
        warn(warnings, where + ": cited quote " + std::to_string(r) +
                           " does not exist; dropped");
        return true;
    });
    s.refs.erase(keep_end, s.refs.end());
}

QuerySample sample_from_json(const json& rec, std::size_t record_index,
                             DatasetSchema schema, Warnings* warnings) {
    const std::string where = "record " + std::to_string(record_index);
    if (!rec.is_object()) throw FatalError(where + ": not a JSON object");
    if (!rec.contains("query") || !rec["query"].is_string())
        throw FatalError(where + ": missing string field 'query'");
    if (!rec.contains("quotes") || !rec["quotes"].is_array())
        throw FatalError(where + ": missing array field 'quotes'");
    if (!rec.contains("answers") || !rec["answers"].is_array())
        throw FatalError(where + ": missing array field 'answers'");

    QuerySample sample;
    sample.id = rec.contains("id") && rec["id"].is_string()
                    ? rec["id"].get<std::string>()
                    : "rec" + std::to_string(record_index);
    sample.query = rec["query"].get<std::string>();

    int qi = 0;
    for (const auto& q : rec["quotes"]) {
        if (!q.is_string())
            throw FatalError(where + ": quotes must be strings");
        Quote quote{++qi, q.get<std::string>()};
        if (tidy_whitespace(quote.text).empty())
            warn(warnings, where + ": quote " + std::to_string(qi) +
                               " is empty after trimming");
        sample.quotes.push_back(std::move(quote));
    }
    const int n_quotes = static_cast<int>(sample.quotes.size());
    if (schema == DatasetSchema::WebglmQa && (n_quotes < 3 || n_quotes > 5))
        warn(warnings, where + ": " + std::to_string(n_quotes) +
                           " quotes, outside the expected 3-5");
    if (schema != DatasetSchema::WebglmQa && n_quotes > 12)
        warn(warnings, where + ": " + std::to_string(n_quotes) +
                           " quotes, outside the expected 1-12");

    for (const auto& ans : rec["answers"]) {
        if (!ans.is_array())
            throw FatalError(where + ": each answer must be an array");
        std::vector<LabeledSentence> sentences;
        for (const auto& item : ans) {
            LabeledSentence s;
            if (schema == DatasetSchema::HagridClean) {
                if (!item.is_object() || !item.contains("text") ||
                    !item.contains("refs") || !item.contains("label"))
                    throw FatalError(where +
                                     ": cleaned sentences need {text, refs, "
                                     "label}");
                s.text = item["text"].get<std::string>();
                for (const auto& r : item["refs"])
                    s.refs.push_back(r.get<int>());
                std::sort(s.refs.begin(), s.refs.end());
                s.refs.erase(std::unique(s.refs.begin(), s.refs.end()),
                             s.refs.end());
                const std::string label = item["label"].get<std::string>();
                s.ref_class = assign_ref_class(s, label);
                s.origin = LabelOrigin::CleanedOverride;
                s.invalid = (label == "invalid");
            } else {
                if (!item.is_string())
                    throw FatalError(where + ": sentences must be strings");
                MarkerParse parsed =
                    parse_reference_markers(item.get<std::string>());
                for (auto& w : parsed.warnings)
                    warn(warnings, where + ": " + w);
                s.text = std::move(parsed.clean_text);
                s.refs = std::move(parsed.refs);
            }
            drop_unknown_refs(s, n_quotes, where, warnings);
            if (s.origin == LabelOrigin::Dataset)
                s.ref_class = assign_ref_class(s, std::nullopt);
            sentences.push_back(std::move(s));
        }
        sample.answers.push_back(std::move(sentences));
    }
    return sample;
}

}  // namespace

std::vector<QuerySample> load_samples(std::istream& in, DatasetSchema schema,
                                      Warnings* warnings) {
    std::string content{std::istreambuf_iterator<char>(in),
                        std::istreambuf_iterator<char>()};
    std::vector<QuerySample> samples;

    std::size_t first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return samples;  // empty stream

    if (content[first] == '[') {
        json arr;
        try {
            arr = json::parse(content);
        } catch (const json::exception& e) {
            throw FatalError(std::string("invalid JSON array: ") + e.what());
        }
        for (std::size_t i = 0; i < arr.size(); ++i)
            samples.push_back(sample_from_json(arr[i], i, schema, warnings));
        return samples;
    }

    std::istringstream lines(content);
    std::string line;
    std::size_t idx = 0;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw FatalError("record " + std::to_string(idx) +
                             ": invalid JSON: " + e.what());
        }
        samples.push_back(sample_from_json(rec, idx, schema, warnings));
        ++idx;
    }
    return samples;
}

std::vector<QuerySample> load_samples_file(const std::string& path,
                                           DatasetSchema schema,
                                           Warnings* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open dataset file '" + path + "'");
    return load_samples(in, schema, warnings);
}

void apply_label_sidecar(std::vector<QuerySample>& samples,
                         const std::string& path, Warnings* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open label sidecar '" + path + "'");

    // value: label text + whether any sentence matched
    std::map<std::pair<std::string, std::string>, std::pair<std::string, bool>>
        labels;
    std::string line;
    std::size_t idx = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw FatalError("sidecar line " + std::to_string(idx) +
                             ": invalid JSON: " + e.what());
        }
        if (!rec.contains("sample_id") || !rec.contains("text") ||
            !rec.contains("label"))
            throw FatalError("sidecar line " + std::to_string(idx) +
                             ": need {sample_id, text, label}");
        labels[{rec["sample_id"].get<std::string>(),
                rec["text"].get<std::string>()}] = {
            rec["label"].get<std::string>(), false};
        ++idx;
    }

    for (auto& sample : samples) {
        for (auto& answer : sample.answers) {
            for (auto& s : answer) {
                auto it = labels.find({sample.id, s.text});
                if (it == labels.end()) continue;
                s.ref_class = assign_ref_class(s, it->second.first);
                s.origin = LabelOrigin::CleanedOverride;
                s.invalid = (it->second.first == "invalid");
                it->second.second = true;
            }
        }
    }
    for (const auto& [key, value] : labels)
        if (!value.second)
            warn(warnings, "sidecar label for sample '" + key.first +
                               "' text '" + key.second +
                               "' matched no sentence");
}

std::array<std::int64_t, 3> raw_class_counts(
    const std::vector<QuerySample>& samples) {
    std::array<std::int64_t, 3> counts{0, 0, 0};
    for (const auto& sample : samples)
        for (const auto& answer : sample.answers)
            for (const auto& s : answer)
                ++counts[static_cast<int>(s.ref_class)];
    return counts;
}

std::int64_t sentence_count(const std::vector<QuerySample>& samples) {
    std::int64_t n = 0;
    for (const auto& sample : samples)
        for (const auto& answer : sample.answers)
            n += static_cast<std::int64_t>(answer.size());
    return n;
}

// ---------------------------------------------------------------------------

LabeledCorpus::LabeledCorpus(
    std::shared_ptr<const std::vector<QuerySample>> samples,
    std::vector<SentenceEntry> sentences)
    : samples_(std::move(samples)), sentences_(std::move(sentences)) {
    for (const auto& e : sentences_)
        ++class_counts_[static_cast<int>(e.sentence.ref_class)];
}

LabeledCorpus normalize_and_dedupe(std::vector<QuerySample> samples) {
    auto owned = std::make_shared<std::vector<QuerySample>>(std::move(samples));
    std::vector<SentenceEntry> entries;

    for (std::size_t si = 0; si < owned->size(); ++si) {
        const QuerySample& sample = (*owned)[si];
        std::map<std::string, std::size_t> seen;  // text -> entry index
        for (const auto& answer : sample.answers) {
            for (const auto& s : answer) {
                auto it = seen.find(s.text);
                if (it == seen.end()) {
                    seen.emplace(s.text, entries.size());
                    entries.push_back({s, static_cast<int>(si)});
                    continue;
                }
                LabeledSentence& merged = entries[it->second].sentence;
                add_unique_sorted(merged.refs, s.refs);
                if (merged.origin == LabelOrigin::Dataset) {
                    if (s.origin == LabelOrigin::CleanedOverride) {
                        merged.ref_class = s.ref_class;
                        merged.origin = s.origin;
                        merged.invalid = s.invalid;
                    } else {
                        merged.ref_class =
                            assign_ref_class(merged, std::nullopt);
                    }
                }
            }
        }
    }
    return LabeledCorpus(std::move(owned), std::move(entries));
}

LabeledCorpus corpus_from_samples(std::vector<QuerySample> samples) {
    auto owned = std::make_shared<std::vector<QuerySample>>(std::move(samples));
    std::vector<SentenceEntry> entries;
    for (std::size_t si = 0; si < owned->size(); ++si)
        for (const auto& answer : (*owned)[si].answers)
            for (const auto& s : answer)
                entries.push_back({s, static_cast<int>(si)});
    return LabeledCorpus(std::move(owned), std::move(entries));
}

RefClass assign_ref_class(const LabeledSentence& s,
                          const std::optional<std::string>& override_label) {
    if (override_label) {
        const std::string& label = *override_label;
        if (label == "invalid") return RefClass::Zero;
        return ref_class_from_string(label);
    }
    if (s.refs.empty()) return RefClass::Zero;
    if (s.refs.size() == 1) return RefClass::One;
    return RefClass::Multi;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_split_indices(const LabeledCorpus& corpus, double train_fraction,
                         std::uint64_t seed) {
    if (corpus.size() == 0) throw FatalError("cannot split an empty corpus");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw FatalError("train fraction must lie in (0,1)");

    std::array<std::vector<std::size_t>, 3> by_class;
    for (std::size_t i = 0; i < corpus.sentences().size(); ++i)
        by_class[static_cast<int>(corpus.sentences()[i].sentence.ref_class)]
            .push_back(i);

    std::vector<std::size_t> train_idx, test_idx;
    for (int c = 0; c < 3; ++c) {
        auto& members = by_class[c];
        if (members.size() < 2)
            throw FatalError(std::string("class '") +
                             to_string(static_cast<RefClass>(c)) + "' has " +
                             std::to_string(members.size()) +
                             " member(s); cannot stratify");
        Rng rng(Rng::mix(seed) ^ Rng::mix(static_cast<std::uint64_t>(c) + 1));
        rng.shuffle(members);
        auto n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(members.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        train_idx.insert(train_idx.end(), members.begin(),
                         members.begin() + static_cast<long>(n_train));
        test_idx.insert(test_idx.end(),
                        members.begin() + static_cast<long>(n_train),
                        members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {std::move(train_idx), std::move(test_idx)};
}

std::pair<LabeledCorpus, LabeledCorpus> stratified_split(
    const LabeledCorpus& corpus, double train_fraction, std::uint64_t seed) {
    auto [train_idx, test_idx] =
        stratified_split_indices(corpus, train_fraction, seed);

    auto subset = [&](const std::vector<std::size_t>& idx) {
        std::vector<SentenceEntry> entries;
        entries.reserve(idx.size());
        for (std::size_t i : idx) entries.push_back(corpus.sentences()[i]);
        return LabeledCorpus(corpus.samples_ptr(), std::move(entries));
    };
    return {subset(train_idx), subset(test_idx)};
}

void write_corpus_jsonl(const LabeledCorpus& corpus, std::ostream& out) {
    int last_sample = -1;
    int sentence_id = 0;
    for (const auto& e : corpus.sentences()) {
        if (e.sample_index != last_sample) {
            last_sample = e.sample_index;
            sentence_id = 0;
        }
        json rec;
        rec["sample_id"] = corpus.samples()[e.sample_index].id;
        rec["sentence_id"] = sentence_id++;
        rec["text"] = e.sentence.text;
        rec["refs"] = e.sentence.refs;
        rec["label"] = to_string(e.sentence.ref_class);
        out << rec.dump() << "\n";
    }
}

}  // namespace attrib
