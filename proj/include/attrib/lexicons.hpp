#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>

namespace attrib {

// Bundled word lists backing the heuristic analyzers.  Each file starts with
// a "# lexicon-version: <tag>" line; all files in a directory must agree.
struct Lexicons {
    std::unordered_set<std::string> stopwords;
    std::unordered_set<std::string> pronouns;
    std::unordered_set<std::string> irregular_participles;
    std::unordered_set<std::string> dale_chall_familiar;
    std::unordered_map<std::string, int> synset_counts;
    std::string version;

    static Lexicons load_dir(const std::string& dir);
};

}  // namespace attrib
