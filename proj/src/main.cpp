#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "attrib/common.hpp"
#include "attrib/pipeline.hpp"

namespace {

// CLI flags collect into (key, value) pairs and win over env and file values.
struct FlagBinding {
    CLI::Option* opt = nullptr;
    std::string key;
    std::string* storage = nullptr;
};

struct SubcommandSpec {
    CLI::App* app = nullptr;
    std::string config_path;
    std::vector<std::unique_ptr<std::string>> values;
    std::vector<FlagBinding> bindings;

    void bind(const std::string& flag, const std::string& key,
              const std::string& help) {
        values.push_back(std::make_unique<std::string>());
        std::string* slot = values.back().get();
        CLI::Option* opt = app->add_option(flag, *slot, help);
        bindings.push_back(FlagBinding{opt, key, slot});
    }
};

void add_common(SubcommandSpec& s) {
    s.app->add_option("--config", s.config_path, "config file (key = value)");
    s.bind("--out", "out.dir", "output directory");
    s.bind("--seed", "seed", "base seed");
    s.bind("--warnings-as-errors", "warnings_as_errors",
           "treat loader warnings as errors (true/false)");
    s.bind("--lexicons", "lexicons.dir", "lexicon directory");
}

void add_dataset(SubcommandSpec& s) {
    s.bind("--dataset", "dataset.path", "dataset file (JSON or JSONL)");
    s.bind("--schema", "dataset.schema", "hagrid | webglm_qa | hagrid_clean");
    s.bind("--sidecar", "dataset.sidecar", "label sidecar (clean variant)");
    s.bind("--variant", "dataset.variant", "clean | raw");
}

void add_forest(SubcommandSpec& s) {
    s.bind("--trees", "forest.n_trees", "trees in the forest");
    s.bind("--depth", "forest.max_depth", "maximum tree depth");
    s.bind("--features-per-split", "forest.features_per_split",
           "features sampled per split");
}

void add_provider(SubcommandSpec& s) {
    s.bind("--provider", "embedding.provider", "builtin | external");
    s.bind("--provider-host", "embedding.host", "external service host");
    s.bind("--provider-port", "embedding.port", "external service port");
    s.bind("--provider-path", "embedding.path", "external service route");
    s.bind("--provider-cache", "embedding.cache_dir",
           "embedding cache directory");
    s.bind("--provider-identity", "embedding.identity",
           "identity string for cache keys");
    s.bind("--provider-timeout-ms", "embedding.timeout_ms",
           "request timeout");
}

attrib::PipelineConfig resolve_config(const SubcommandSpec& s) {
    attrib::PipelineConfig cfg;
    if (!s.config_path.empty())
        cfg = attrib::PipelineConfig::from_file(s.config_path);
    cfg.apply_env_overrides();
    for (const FlagBinding& b : s.bindings)
        if (b.opt->count() > 0) cfg.set(b.key, *b.storage);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentence-level attribution pipeline"};
    app.require_subcommand(1);

    SubcommandSpec ingest;
    ingest.app = app.add_subcommand(
        "ingest", "parse a raw dataset into the occurrence corpus");
    add_common(ingest);
    add_dataset(ingest);

    SubcommandSpec clean;
    clean.app = app.add_subcommand(
        "clean", "normalize, relabel via sidecar, and dedupe");
    add_common(clean);
    add_dataset(clean);

    SubcommandSpec features;
    features.app =
        app.add_subcommand("features", "write the per-sentence feature table");
    add_common(features);
    add_dataset(features);

    SubcommandSpec train;
    train.app = app.add_subcommand(
        "train", "fit the pre-attribution forest on the whole corpus");
    add_common(train);
    add_dataset(train);
    add_forest(train);
    train.bind("--model", "model.path", "model output path");

    SubcommandSpec evaluate;
    evaluate.app = app.add_subcommand(
        "evaluate", "run the repeated split experiments");
    add_common(evaluate);
    add_dataset(evaluate);
    add_forest(evaluate);
    add_provider(evaluate);
    evaluate.bind("--runs", "eval.runs", "repeated splits per experiment");
    evaluate.bind("--train-fraction", "eval.train_fraction",
                  "training fraction per split");
    evaluate.bind("--mode", "eval.mode",
                  "pre_attribution | attribution | both");

    SubcommandSpec attribute;
    attribute.app = app.add_subcommand(
        "attribute", "attribute an answer against a document");
    add_common(attribute);
    add_provider(attribute);
    attribute.bind("--model", "model.path", "trained model file");
    attribute.bind("--document", "attribute.document",
                   "reference document to quote from");
    attribute.bind("--answer", "attribute.answer", "generated answer text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (ingest.app->parsed())
            return attrib::cmd_ingest(resolve_config(ingest));
        if (clean.app->parsed())
            return attrib::cmd_clean(resolve_config(clean));
        if (features.app->parsed())
            return attrib::cmd_features(resolve_config(features));
        if (train.app->parsed())
            return attrib::cmd_train(resolve_config(train));
        if (evaluate.app->parsed())
            return attrib::cmd_evaluate(resolve_config(evaluate));
        if (attribute.app->parsed())
            return attrib::cmd_attribute(resolve_config(attribute));
    } catch (const attrib::RetriableError& e) {
        std::cerr << "error (retriable): " << e.what() << "\n";
        return 1;
    } catch (const attrib::FatalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
