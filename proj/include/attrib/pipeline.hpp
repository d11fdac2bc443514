#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "attrib/corpus.hpp"
#include "attrib/document.hpp"
#include "attrib/embedding.hpp"
#include "attrib/eval.hpp"
#include "attrib/features.hpp"
#include "attrib/forest.hpp"
#include "attrib/lexicons.hpp"

namespace attrib {

// Flat dotted-key configuration.  File format: `key = value` lines, `#`
// comments, optional `[section]` headers that prefix the keys that follow.
// Every key can be overridden by an ATTRIB_ environment variable (dots map
// to underscores, uppercased: dataset.path -> ATTRIB_DATASET_PATH).
struct PipelineConfig {
    std::string dataset_path;
    std::string dataset_schema = "hagrid";
    std::string dataset_sidecar;
    // "clean" dedupes and applies the sidecar; "raw" keeps every occurrence
    std::string dataset_variant = "clean";
    std::string lexicon_dir = "data/lexicons";

    ForestParams forest;

    int runs = 30;
    double train_fraction = 0.7;
    // "pre_attribution", "attribution", or "both"
    std::string eval_mode = "pre_attribution";

    std::string provider_kind = "builtin";
    std::string provider_host = "127.0.0.1";
    int provider_port = 0;
    std::string provider_path = "/embed";
    int provider_timeout_ms = 5000;
    std::string provider_cache_dir;
    std::string provider_identity = "external";

    std::uint64_t seed = 0;
    bool warnings_as_errors = false;
    std::string out_dir = "out";

    std::string model_path;  // attribute input / train output override
    std::string document_path;
    std::string answer_path;

    void set(const std::string& key, const std::string& value);
    void apply_env_overrides();
    void validate() const;
    std::string serialize() const;

    static PipelineConfig from_stream(std::istream& in,
                                      const std::string& source);
    static PipelineConfig from_file(const std::string& path);
};

// Everything `attribute` needs at inference time, in one deterministic file.
struct ModelBundle {
    ForestModel forest;
    NgramModel bigram;
    NgramModel trigram;
    std::string lexicon_version;

    nlohmann::json to_json() const;
    static ModelBundle from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    // Missing or unreadable file has train guidance in the message.
    static ModelBundle load(const std::string& path);
};

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg);

// Corpus per config: raw keeps occurrences; clean applies the sidecar (when
// configured) and dedupes.
LabeledCorpus load_configured_corpus(const PipelineConfig& cfg,
                                     Warnings* warnings);

// Subcommand drivers; each returns the process exit code (0/1/2).
int cmd_ingest(const PipelineConfig& cfg);
int cmd_clean(const PipelineConfig& cfg);
int cmd_features(const PipelineConfig& cfg);
int cmd_train(const PipelineConfig& cfg);
int cmd_evaluate(const PipelineConfig& cfg);
int cmd_attribute(const PipelineConfig& cfg);

}  // namespace attrib
