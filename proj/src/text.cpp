#include "attrib/text.hpp"

#include <algorithm>

namespace attrib {
namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
}

bool is_alpha(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_word_char(unsigned char c) {
    return is_alpha(c) || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_joiner(unsigned char c) { return c == '\'' || c == '-'; }

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' ||
           c == 'y';
}

}  // namespace

TokenizedSentence tokenize(const std::string& text) {
    TokenizedSentence out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (is_word_char(c)) {
            std::size_t start = i;
            while (i < n) {
                unsigned char cur = text[i];
                if (is_word_char(cur)) {
                    ++i;
                } else if (is_joiner(cur) && i + 1 < n &&
                           is_word_char(static_cast<unsigned char>(
                               text[i + 1]))) {
                    ++i;  // internal apostrophe/hyphen stays in the word
                } else {
                    break;
                }
            }
            std::string word = text.substr(start, i - start);
            out.chars_in_words += static_cast<int>(word.size());
            for (unsigned char wc : word)
                if (is_alpha(wc) || wc >= 0x80) ++out.letters;
            out.word_tokens.push_back(std::move(word));
            continue;
        }
        out.punct_tokens.emplace_back(1, static_cast<char>(c));
        ++i;
    }
    return out;
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
    });
    return out;
}

int count_syllables(const std::string& word) {
    std::string w = to_lower(word);
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        bool v = is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    if (w.size() >= 2 && w.back() == 'e' && !is_vowel(w[w.size() - 2]) &&
        groups > 1)
        --groups;  // silent final e
    return std::max(1, groups);
}

bool starts_capitalized(const std::string& token) {
    return !token.empty() && token[0] >= 'A' && token[0] <= 'Z';
}

}  // namespace attrib
