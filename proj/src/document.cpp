#include "attrib/document.hpp"

#include <cctype>
#include <cstdio>
#include <set>

#include "attrib/text.hpp"

namespace attrib {

using nlohmann::json;

namespace {

const std::set<std::string>& abbreviations() {
    static const std::set<std::string> abbrevs = {
        "e.g", "i.e",  "etc", "cf",  "vs",  "al",  "ca", "dr",
        "mr",  "mrs",  "ms",  "st",  "prof", "fig", "figs",
        "eq",  "eqs",  "sec", "no",  "vol",  "pp",  "approx"};
    return abbrevs;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string collapse_ws(const std::string& s) {
    std::string out;
    bool pending = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!out.empty()) pending = true;
            continue;
        }
        if (pending) {
            out += ' ';
            pending = false;
        }
        out += static_cast<char>(c);
    }
    return out;
}

// the word (possibly dotted, as in "e.g") ending right before position `dot`
std::string token_before(const std::string& text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0) {
        unsigned char c = text[start - 1];
        if (std::isalpha(c) || c == '.')
            --start;
        else
            break;
    }
    std::string tok = text.substr(start, dot - start);
    while (!tok.empty() && tok.front() == '.') tok.erase(tok.begin());
    for (char& c : tok)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tok;
}

std::size_t word_count(const std::string& s) {
    return tokenize(s).word_tokens.size();
}

}  // namespace

std::vector<Quote> segment_document(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        cur += c;
        if (!is_terminal(c)) continue;

        std::size_t j = i + 1;  // absorb runs like "?!" or '."'
        while (j < text.size() &&
               (is_terminal(text[j]) || text[j] == '"' || text[j] == '\'' ||
                text[j] == ')' || text[j] == ']')) {
            cur += text[j];
            ++j;
        }
        bool at_end = j >= text.size();
        if (!at_end && !std::isspace(static_cast<unsigned char>(text[j]))) {
            i = j - 1;  // mid-token punctuation, e.g. "3.14"
            continue;
        }
        if (c == '.' && j == i + 1) {
            std::string tok = token_before(text, i);
            if (abbreviations().count(tok) ||
                (tok.size() == 1 &&
                 std::isalpha(static_cast<unsigned char>(tok[0])))) {
                i = j - 1;
                continue;
            }
        }
        std::string sentence = collapse_ws(cur);
        if (!sentence.empty()) parts.push_back(std::move(sentence));
        cur.clear();
        i = j - 1;
    }
    std::string tail = collapse_ws(cur);
    if (!tail.empty()) parts.push_back(std::move(tail));

    std::vector<Quote> quotes;
    for (auto& p : parts) {
        if (!quotes.empty() && word_count(p) < 3) {
            quotes.back().text += " " + p;
            continue;
        }
        quotes.push_back({static_cast<int>(quotes.size()) + 1, std::move(p)});
    }
    if (quotes.empty())
        throw FatalError("document contains no sentences");
    return quotes;
}

AttributionReport attribute_document(const std::string& answer,
                                     const std::string& document,
                                     const ForestModel& model,
                                     const FeatureContext& ctx,
                                     EmbeddingProvider& provider,
                                     Warnings* warnings) {
    AttributionReport report;
    report.quotes = segment_document(document);

    std::vector<Quote> sentences;
    try {
        sentences = segment_document(answer);
    } catch (const FatalError&) {
        throw FatalError("answer contains no sentences");
    }

    std::vector<std::string> quote_texts;
    quote_texts.reserve(report.quotes.size());
    for (const auto& q : report.quotes) quote_texts.push_back(q.text);
    std::vector<EmbeddingVector> quote_vecs =
        provider.embed_batch(quote_texts);

    for (const auto& s : sentences) {
        ReportEntry entry;
        entry.sentence = s.text;
        entry.predicted = classify_sentence(s.text, model, ctx);
        if (entry.predicted == RefClass::Zero) {
            entry.result.method = AttributionMethod::Skipped;
        } else {
            try {
                EmbeddingVector vec = provider.embed(s.text);
                entry.result =
                    attribute_by_class(entry.predicted, vec, quote_vecs,
                                       warnings);
            } catch (const RetriableError& ex) {
                entry.error = ex.what();
                report.complete = false;
            }
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::string AttributionReport::to_text() const {
    std::string out;
    for (const auto& e : entries) {
        if (!out.empty()) out += "\n";
        out += "> INPUT Sentence: " + e.sentence + "\n";
        if (!e.error.empty()) {
            out += "< OUTPUT Quotes: attribution failed: " + e.error + "\n";
            continue;
        }
        if (e.predicted == RefClass::Zero) {
            out += "< OUTPUT Quotes: no attribution required\n";
            continue;
        }
        out += "< OUTPUT Quotes:\n";
        char dist[32];
        std::snprintf(dist, sizeof(dist), "%.4f",
                      e.result.distance.value_or(0.0));
        for (int ref : e.result.refs)
            out += "  [" + std::to_string(ref) + "] (distance " + dist +
                   ") " + quotes[static_cast<std::size_t>(ref) - 1].text +
                   "\n";
    }
    return out;
}

json AttributionReport::to_json() const {
    json j;
    j["quote_count"] = quotes.size();
    j["complete"] = complete;
    json es = json::array();
    for (const auto& e : entries) {
        json je;
        je["sentence"] = e.sentence;
        je["predicted"] = to_string(e.predicted);
        je["method"] = to_string(e.result.method);
        je["refs"] = e.result.refs;
        if (e.result.distance)
            je["distance"] = *e.result.distance;
        else
            je["distance"] = nullptr;
        json texts = json::array();
        for (int ref : e.result.refs)
            texts.push_back(quotes[static_cast<std::size_t>(ref) - 1].text);
        je["quotes"] = texts;
        if (!e.error.empty()) je["error"] = e.error;
        es.push_back(je);
    }
    j["entries"] = es;
    return j;
}

}  // namespace attrib
