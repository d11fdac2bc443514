#include "attrib/lexicons.hpp"

#include <fstream>
#include <functional>

#include "attrib/common.hpp"

namespace attrib {
namespace {

constexpr const char* kVersionPrefix = "# lexicon-version: ";

// Reads one list file, verifying the shared version tag.
void read_entries(const std::string& path, std::string& version,
                  const std::function<void(const std::string&)>& on_entry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open lexicon file '" + path + "'");
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            first = false;
            if (line.rfind(kVersionPrefix, 0) != 0)
                throw FatalError("lexicon file '" + path +
                                 "' lacks a version header");
            std::string v = line.substr(std::string(kVersionPrefix).size());
            if (version.empty())
                version = v;
            else if (version != v)
                throw FatalError("lexicon version mismatch in '" + path +
                                 "': " + v + " vs " + version);
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        on_entry(line);
    }
}

}  // namespace

Lexicons Lexicons::load_dir(const std::string& dir) {
    Lexicons lex;
    auto into_set = [](std::unordered_set<std::string>& set) {
        return [&set](const std::string& line) { set.insert(line); };
    };
    read_entries(dir + "/stopwords.txt", lex.version, into_set(lex.stopwords));
    read_entries(dir + "/pronouns.txt", lex.version, into_set(lex.pronouns));
    read_entries(dir + "/irregular_participles.txt", lex.version,
                 into_set(lex.irregular_participles));
    read_entries(dir + "/dale_chall_familiar.txt", lex.version,
                 into_set(lex.dale_chall_familiar));
    read_entries(dir + "/synset_counts.tsv", lex.version,
                 [&lex](const std::string& line) {
                     auto tab = line.find('\t');
                     if (tab == std::string::npos)
                         throw FatalError("synset_counts.tsv: malformed line '" +
                                          line + "'");
                     lex.synset_counts[line.substr(0, tab)] =
                         std::stoi(line.substr(tab + 1));
                 });
    if (lex.stopwords.empty() || lex.dale_chall_familiar.empty())
        throw FatalError("lexicon directory '" + dir + "' is incomplete");
    return lex;
}

}  // namespace attrib
