#include "attrib/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "attrib/common.hpp"

namespace attrib {
namespace {

constexpr char kSep = '\x1f';
const std::string kStart = "<s>";
const std::string kEnd = "</s>";

std::string join_key(const std::vector<std::string>& parts) {
    std::string key;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) key.push_back(kSep);
        key += parts[i];
    }
    return key;
}

std::vector<std::string> lower_words(const std::string& text) {
    std::vector<std::string> words;
    for (const auto& w : tokenize(text).word_tokens)
        words.push_back(to_lower(w));
    return words;
}

const std::unordered_set<std::string>& be_forms() {
    static const std::unordered_set<std::string> set{
        "is", "are", "was", "were", "be", "been", "being", "am"};
    return set;
}

const std::unordered_set<std::string>& auxiliaries() {
    static const std::unordered_set<std::string> set{
        "is",   "are",  "was",   "were", "be",    "been",  "being", "am",
        "have", "has",  "had",   "do",   "does",  "did",   "will",  "would",
        "can",  "could", "may",  "might", "must", "shall", "should"};
    return set;
}

bool has_suffix(const std::string& w, const char* suffix) {
    std::size_t n = std::char_traits<char>::length(suffix);
    return w.size() >= n && w.compare(w.size() - n, n, suffix) == 0;
}

bool verb_suffix(const std::string& w) {
    if (w.size() > 4 && has_suffix(w, "ing")) return true;
    if (w.size() > 3 && has_suffix(w, "ed")) return true;
    return has_suffix(w, "ize") || has_suffix(w, "izes") ||
           has_suffix(w, "ise") || has_suffix(w, "ises") ||
           has_suffix(w, "ify") || has_suffix(w, "ifies");
}

bool participle_like(const std::string& lower, const Lexicons& lex) {
    if (lex.irregular_participles.count(lower)) return true;
    if (lower.size() > 3 && (has_suffix(lower, "ed") || has_suffix(lower, "en")))
        return true;
    return false;
}

}  // namespace

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "lexical_diversity", "ne_density",       "parse_depth",
    "flesch",            "entropy",          "synsets_per_word",
    "noun_verb_ratio",   "stopword_ratio",   "punct_ratio",
    "chars_per_word",    "syllables",        "words",
    "unique_words",      "avg_bigram_prob",  "avg_trigram_prob",
    "pronoun_ratio",     "passive_ratio",    "ne_sentence",
    "smog",              "coleman_liau",     "ari",
    "dale_chall",        "linsear_write",    "gunning_fog"};

// ---------------------------------------------------------------------------
// NgramModel

NgramModel NgramModel::fit(const std::vector<std::string>& texts, int order) {
    if (order != 2 && order != 3)
        throw FatalError("n-gram order must be 2 or 3");
    NgramModel model;
    model.order_ = order;

    std::unordered_set<std::string> vocab;
    for (const auto& text : texts) {
        std::vector<std::string> padded(order - 1, kStart);
        for (auto& w : lower_words(text)) {
            vocab.insert(w);
            padded.push_back(std::move(w));
        }
        padded.push_back(kEnd);
        if (padded.size() < static_cast<std::size_t>(order)) continue;
        for (std::size_t i = order - 1; i < padded.size(); ++i) {
            std::vector<std::string> gram(padded.begin() + (i - order + 1),
                                          padded.begin() + i + 1);
            std::vector<std::string> ctx(gram.begin(), gram.end() - 1);
            ++model.gram_counts_[join_key(gram)];
            ++model.context_counts_[join_key(ctx)];
        }
    }
    model.vocab_size_ = static_cast<std::int64_t>(vocab.size()) + 1;  // </s>
    return model;
}

double NgramModel::probability(const std::vector<std::string>& context,
                               const std::string& word) const {
    std::vector<std::string> ctx;
    const std::size_t want = order_ - 1;
    for (std::size_t i = context.size() > want ? context.size() - want : 0;
         i < context.size(); ++i)
        ctx.push_back(context[i]);
    while (ctx.size() < want) ctx.insert(ctx.begin(), kStart);

    std::string ctx_key = join_key(ctx);
    ctx.push_back(word);
    std::string gram_key = join_key(ctx);

    auto g = gram_counts_.find(gram_key);
    auto c = context_counts_.find(ctx_key);
    double num = 1.0 + (g == gram_counts_.end() ? 0.0 : double(g->second));
    double den = double(vocab_size_) +
                 (c == context_counts_.end() ? 0.0 : double(c->second));
    return num / den;
}

double NgramModel::average_sentence_probability(
    const std::vector<std::string>& words) const {
    if (words.empty()) return 1.0;
    std::vector<std::string> padded(order_ - 1, kStart);
    padded.insert(padded.end(), words.begin(), words.end());
    padded.push_back(kEnd);

    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = order_ - 1; i < padded.size(); ++i) {
        std::vector<std::string> ctx(padded.begin() + (i - order_ + 1),
                                     padded.begin() + i);
        sum += probability(ctx, padded[i]);
        ++n;
    }
    return sum / static_cast<double>(n);
}

nlohmann::json NgramModel::to_json() const {
    nlohmann::json j;
    j["order"] = order_;
    j["vocab_size"] = vocab_size_;
    j["grams"] = gram_counts_;
    j["contexts"] = context_counts_;
    return j;
}

NgramModel NgramModel::from_json(const nlohmann::json& j) {
    NgramModel model;
    model.order_ = j.at("order").get<int>();
    model.vocab_size_ = j.at("vocab_size").get<std::int64_t>();
    model.gram_counts_ =
        j.at("grams").get<std::unordered_map<std::string, std::int64_t>>();
    model.context_counts_ =
        j.at("contexts").get<std::unordered_map<std::string, std::int64_t>>();
    if (model.order_ != 2 && model.order_ != 3)
        throw FatalError("n-gram model: bad order");
    return model;
}

// ---------------------------------------------------------------------------
// Heuristic taggers

PosCounts count_pos(const TokenizedSentence& tokens, const Lexicons& lex) {
    PosCounts counts;
    for (std::size_t i = 0; i < tokens.word_tokens.size(); ++i) {
        const std::string lower = to_lower(tokens.word_tokens[i]);
        if (lex.pronouns.count(lower)) continue;
        if (auxiliaries().count(lower) ||
            lex.irregular_participles.count(lower)) {
            ++counts.verbs;
            continue;
        }
        if (lex.stopwords.count(lower)) continue;
        if (verb_suffix(lower)) {
            ++counts.verbs;
            continue;
        }
        ++counts.nouns;  // open-class default
    }
    return counts;
}

std::vector<bool> named_entity_flags(const TokenizedSentence& tokens) {
    const auto& words = tokens.word_tokens;
    std::vector<bool> flags(words.size(), false);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (!starts_capitalized(words[i])) continue;
        if (i > 0)
            flags[i] = true;
        else if (words.size() > 1 && starts_capitalized(words[1]))
            flags[i] = true;
    }
    return flags;
}

// ---------------------------------------------------------------------------
// Feature extraction

FeatureVector extract_base_features(const std::string& text,
                                    const Lexicons& lex) {
    FeatureVector fv;
    TokenizedSentence tok = tokenize(text);
    const auto& words = tok.word_tokens;
    const double W = static_cast<double>(words.size());

    if (words.empty()) {
        fv.degenerate = true;
        fv.values[13] = fv.values[14] = 1.0;
        return fv;
    }

    std::vector<std::string> lowers;
    lowers.reserve(words.size());
    for (const auto& w : words) lowers.push_back(to_lower(w));

    std::unordered_map<std::string, int> word_counts;
    for (const auto& w : lowers) ++word_counts[w];
    const double unique = static_cast<double>(word_counts.size());

    // counts and ratios
    fv.values[11] = W;
    fv.values[12] = unique;
    fv.values[0] = unique / W;

    auto ne = named_entity_flags(tok);
    int ne_count = static_cast<int>(std::count(ne.begin(), ne.end(), true));
    fv.values[1] = ne_count / W;

    int non_stop = 0, non_stop_ne = 0, stop = 0, pron = 0;
    for (std::size_t i = 0; i < lowers.size(); ++i) {
        if (lex.pronouns.count(lowers[i])) ++pron;
        if (lex.stopwords.count(lowers[i])) {
            ++stop;
        } else {
            ++non_stop;
            if (ne[i]) ++non_stop_ne;
        }
    }
    fv.values[7] = stop / W;
    fv.values[15] = pron / W;
    fv.values[17] = (non_stop > 0 && non_stop == non_stop_ne) ? 1.0 : 0.0;

    // parse-depth proxy: bracket nesting plus subordinating markers
    static const std::unordered_set<std::string> kSubordinators{
        "that", "which", "who", "because", "although", "while", "if", "when"};
    int depth = 0, max_depth = 0;
    for (char c : text) {
        if (c == '(' || c == '[' || c == '{') max_depth = std::max(++depth, max_depth);
        if (c == ')' || c == ']' || c == '}') depth = std::max(0, depth - 1);
    }
    int subs = 0;
    for (const auto& w : lowers) subs += kSubordinators.count(w) ? 1 : 0;
    fv.values[2] = std::min(6, 1 + max_depth + subs);

    // syllable-based counts
    double syllables = 0;
    int polysyllables = 0;
    double linsear_points = 0;
    for (const auto& w : lowers) {
        int s = count_syllables(w);
        syllables += s;
        if (s >= 3) ++polysyllables;
        linsear_points += (s < 3) ? 1.0 : 3.0;
    }
    fv.values[10] = syllables;

    // entropy of the word distribution
    double entropy = 0.0;
    for (const auto& [w, c] : word_counts) {
        double p = c / W;
        entropy -= p * std::log2(p);
    }
    fv.values[4] = std::max(0.0, entropy);

    // lexicon features
    double synsets = 0.0;
    int unfamiliar = 0;
    for (const auto& w : lowers) {
        auto it = lex.synset_counts.find(w);
        synsets += (it == lex.synset_counts.end()) ? 1.0 : it->second;
        if (!lex.dale_chall_familiar.count(w)) ++unfamiliar;
    }
    fv.values[5] = synsets / W;

    PosCounts pos = count_pos(tok, lex);
    fv.values[6] = (pos.nouns + 1.0) / (pos.verbs + 1.0);

    // passive voice: be-form followed within two tokens by a participle
    int passives = 0;
    for (std::size_t i = 0; i < lowers.size(); ++i) {
        if (!be_forms().count(lowers[i])) continue;
        for (std::size_t k = i + 1; k <= i + 2 && k < lowers.size(); ++k) {
            if (participle_like(lowers[k], lex)) {
                ++passives;
                break;
            }
        }
    }
    fv.values[16] = passives / std::max(1.0, double(pos.verbs));

    fv.values[8] = std::min(1.0, tok.punct_tokens.size() / W);
    double chars_total = tok.chars_in_words;
    for (const auto& p : tok.punct_tokens) chars_total += p.size();
    fv.values[9] = chars_total / W;

    // readability formulas, sentence count fixed at 1
    fv.values[3] = 206.835 - 1.015 * W - 84.6 * (syllables / W);
    fv.values[18] = 1.0430 * std::sqrt(polysyllables * 30.0) + 3.1291;
    fv.values[19] = 0.0588 * (tok.letters / W * 100.0) -
                    0.296 * (100.0 / W) - 15.8;
    fv.values[20] = 4.71 * (tok.chars_in_words / W) + 0.5 * W - 21.43;

    double pdw = 100.0 * unfamiliar / W;
    fv.values[21] = 0.1579 * pdw + 0.0496 * W + (pdw > 5.0 ? 3.6365 : 0.0);

    fv.values[22] =
        linsear_points > 20.0 ? linsear_points / 2.0 : linsear_points / 2.0 - 1.0;
    fv.values[23] = 0.4 * (W + 100.0 * polysyllables / W);

    fv.values[13] = fv.values[14] = 1.0;  // until n-gram models are applied
    return fv;
}

void add_ngram_features(FeatureVector& fv, const std::string& text,
                        const NgramModel& bigram, const NgramModel& trigram) {
    if (fv.degenerate) return;
    auto words = lower_words(text);
    fv.values[13] = bigram.average_sentence_probability(words);
    fv.values[14] = trigram.average_sentence_probability(words);
}

FeatureVector extract_features(const std::string& text,
                               const NgramModel& bigram,
                               const NgramModel& trigram, const Lexicons& lex) {
    FeatureVector fv = extract_base_features(text, lex);
    add_ngram_features(fv, text, bigram, trigram);
    return fv;
}

}  // namespace attrib
