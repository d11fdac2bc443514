#pragma once

#include <string>
#include <vector>

namespace attrib {

struct TokenizedSentence {
    std::vector<std::string> word_tokens;   // case preserved
    std::vector<std::string> punct_tokens;  // one token per character
    int chars_in_words = 0;                 // bytes inside word tokens
    int letters = 0;                        // alphabetic bytes inside words
};

// Words are maximal runs of letters/digits plus internal apostrophes and
// hyphens; any other printable non-space character is a punctuation token.
// Non-ASCII bytes are treated as word characters.
TokenizedSentence tokenize(const std::string& text);

std::string to_lower(const std::string& s);

// Vowel-group count (a,e,i,o,u,y) with the silent-final-e subtraction and a
// floor of 1.
int count_syllables(const std::string& word);

bool starts_capitalized(const std::string& token);

}  // namespace attrib
