#include "attrib/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace attrib {
namespace {

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw FatalError("config key '" + key + "' needs an integer, got '" +
                         value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw FatalError("config key '" + key + "' needs a number, got '" +
                         value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw FatalError("config key '" + key + "' needs true/false, got '" +
                     value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw FatalError("config key '" + key +
                         "' needs a non-negative integer, got '" + value +
                         "'");
    }
}

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Every key the config file, the environment, and `set` understand.
const char* const kConfigKeys[] = {
    "dataset.path",         "dataset.schema",     "dataset.sidecar",
    "dataset.variant",      "lexicons.dir",       "forest.n_trees",
    "forest.max_depth",     "forest.features_per_split",
    "forest.bootstrap",     "eval.runs",          "eval.train_fraction",
    "eval.mode",            "embedding.provider", "embedding.host",
    "embedding.port",       "embedding.path",     "embedding.timeout_ms",
    "embedding.cache_dir",  "embedding.identity", "seed",
    "warnings_as_errors",   "out.dir",            "model.path",
    "attribute.document",   "attribute.answer",
};

std::string env_name_for(const std::string& key) {
    std::string name = "ATTRIB_";
    for (char c : key)
        name += (c == '.') ? '_'
                           : static_cast<char>(std::toupper(
                                 static_cast<unsigned char>(c)));
    return name;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (key == "dataset.path")
        dataset_path = value;
    else if (key == "dataset.schema")
        dataset_schema = value;
    else if (key == "dataset.sidecar")
        dataset_sidecar = value;
    else if (key == "dataset.variant")
        dataset_variant = value;
    else if (key == "lexicons.dir")
        lexicon_dir = value;
    else if (key == "forest.n_trees")
        forest.n_trees = parse_int(key, value);
    else if (key == "forest.max_depth")
        forest.max_depth = parse_int(key, value);
    else if (key == "forest.features_per_split")
        forest.features_per_split = parse_int(key, value);
    else if (key == "forest.bootstrap")
        forest.bootstrap = parse_bool(key, value);
    else if (key == "eval.runs")
        runs = parse_int(key, value);
    else if (key == "eval.train_fraction")
        train_fraction = parse_double(key, value);
    else if (key == "eval.mode")
        eval_mode = value;
    else if (key == "embedding.provider")
        provider_kind = value;
    else if (key == "embedding.host")
        provider_host = value;
    else if (key == "embedding.port")
        provider_port = parse_int(key, value);
    else if (key == "embedding.path")
        provider_path = value;
    else if (key == "embedding.timeout_ms")
        provider_timeout_ms = parse_int(key, value);
    else if (key == "embedding.cache_dir")
        provider_cache_dir = value;
    else if (key == "embedding.identity")
        provider_identity = value;
    else if (key == "seed")
        seed = parse_u64(key, value);
    else if (key == "warnings_as_errors")
        warnings_as_errors = parse_bool(key, value);
    else if (key == "out.dir")
        out_dir = value;
    else if (key == "model.path")
        model_path = value;
    else if (key == "attribute.document")
        document_path = value;
    else if (key == "attribute.answer")
        answer_path = value;
    else
        throw FatalError("unknown config key '" + key + "'");
}

void PipelineConfig::apply_env_overrides() {
    for (const char* key : kConfigKeys) {
        const char* v = std::getenv(env_name_for(key).c_str());
        if (v != nullptr) set(key, v);
    }
}

void PipelineConfig::validate() const {
    schema_from_string(dataset_schema);  // throws on junk
    if (dataset_variant != "clean" && dataset_variant != "raw")
        throw FatalError("dataset.variant must be 'clean' or 'raw', got '" +
                         dataset_variant + "'");
    if (eval_mode != "pre_attribution" && eval_mode != "attribution" &&
        eval_mode != "both")
        throw FatalError(
            "eval.mode must be 'pre_attribution', 'attribution' or 'both', "
            "got '" +
            eval_mode + "'");
    if (provider_kind != "builtin" && provider_kind != "external")
        throw FatalError(
            "embedding.provider must be 'builtin' or 'external', got '" +
            provider_kind + "'");
    if (forest.n_trees < 1) throw FatalError("forest.n_trees must be >= 1");
    if (forest.max_depth < 1) throw FatalError("forest.max_depth must be >= 1");
    if (forest.features_per_split < 1)
        throw FatalError("forest.features_per_split must be >= 1");
    if (runs < 1) throw FatalError("eval.runs must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw FatalError("eval.train_fraction must lie in (0, 1)");
    if (provider_timeout_ms < 1)
        throw FatalError("embedding.timeout_ms must be >= 1");
    if (out_dir.empty()) throw FatalError("out.dir must not be empty");
}

std::string PipelineConfig::serialize() const {
    std::ostringstream os;
    os << "dataset.path = " << dataset_path << "\n";
    os << "dataset.schema = " << dataset_schema << "\n";
    os << "dataset.sidecar = " << dataset_sidecar << "\n";
    os << "dataset.variant = " << dataset_variant << "\n";
    os << "lexicons.dir = " << lexicon_dir << "\n";
    os << "forest.n_trees = " << forest.n_trees << "\n";
    os << "forest.max_depth = " << forest.max_depth << "\n";
    os << "forest.features_per_split = " << forest.features_per_split << "\n";
    os << "forest.bootstrap = " << (forest.bootstrap ? "true" : "false")
       << "\n";
    os << "eval.runs = " << runs << "\n";
    os << "eval.train_fraction = " << train_fraction << "\n";
    os << "eval.mode = " << eval_mode << "\n";
    os << "embedding.provider = " << provider_kind << "\n";
    os << "embedding.host = " << provider_host << "\n";
    os << "embedding.port = " << provider_port << "\n";
    os << "embedding.path = " << provider_path << "\n";
    os << "embedding.timeout_ms = " << provider_timeout_ms << "\n";
    os << "embedding.cache_dir = " << provider_cache_dir << "\n";
    os << "embedding.identity = " << provider_identity << "\n";
    os << "seed = " << seed << "\n";
    os << "warnings_as_errors = " << (warnings_as_errors ? "true" : "false")
       << "\n";
    os << "out.dir = " << out_dir << "\n";
    os << "model.path = " << model_path << "\n";
    os << "attribute.document = " << document_path << "\n";
    os << "attribute.answer = " << answer_path << "\n";
    return os.str();
}

PipelineConfig PipelineConfig::from_stream(std::istream& in,
                                           const std::string& source) {
    PipelineConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim_copy(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw FatalError(source + ":" + std::to_string(lineno) +
                                 ": malformed section header '" + s + "'");
            section = trim_copy(s.substr(1, s.size() - 2));
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw FatalError(source + ":" + std::to_string(lineno) +
                             ": expected 'key = value', got '" + s + "'");
        std::string key = trim_copy(s.substr(0, eq));
        std::string value = trim_copy(s.substr(eq + 1));
        if (key.empty())
            throw FatalError(source + ":" + std::to_string(lineno) +
                             ": empty key");
        if (!section.empty()) key = section + "." + key;
        try {
            cfg.set(key, value);
        } catch (const FatalError& e) {
            throw FatalError(source + ":" + std::to_string(lineno) + ": " +
                             e.what());
        }
    }
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FatalError("cannot open config file '" + path + "'");
    return from_stream(in, path);
}

nlohmann::json ModelBundle::to_json() const {
    nlohmann::json j;
    j["format"] = "attrib-model-v1";
    j["lexicon_version"] = lexicon_version;
    j["forest"] = forest.to_json();
    j["bigram"] = bigram.to_json();
    j["trigram"] = trigram.to_json();
    return j;
}

ModelBundle ModelBundle::from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "attrib-model-v1")
        throw FatalError("not an attrib-model-v1 file");
    ModelBundle b;
    b.lexicon_version = j.value("lexicon_version", "");
    b.forest = ForestModel::from_json(j.at("forest"));
    b.bigram = NgramModel::from_json(j.at("bigram"));
    b.trigram = NgramModel::from_json(j.at("trigram"));
    return b;
}

void ModelBundle::save(const std::string& path) const {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::string tmp = path + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw FatalError("cannot write model file '" + path + "'");
        out << to_json().dump(2) << "\n";
    }
    fs::rename(tmp, p);
}

ModelBundle ModelBundle::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FatalError("no model file at '" + path +
                         "'; run the train command to create one");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FatalError("model file '" + path +
                         "' is not valid JSON; re-run the train command (" +
                         e.what() + ")");
    }
    try {
        return from_json(j);
    } catch (const FatalError& e) {
        throw FatalError("model file '" + path + "': " + e.what());
    }
}

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg) {
    if (cfg.provider_kind == "builtin")
        return std::make_unique<BuiltinHashProvider>();
    ExternalServiceConfig ec;
    ec.host = cfg.provider_host;
    ec.port = cfg.provider_port;
    ec.path = cfg.provider_path;
    ec.identity = cfg.provider_identity;
    ec.timeout_ms = cfg.provider_timeout_ms;
    ec.cache_dir = cfg.provider_cache_dir;
    return std::make_unique<ExternalServiceProvider>(ec);
}

LabeledCorpus load_configured_corpus(const PipelineConfig& cfg,
                                     Warnings* warnings) {
    if (cfg.dataset_path.empty())
        throw FatalError("no dataset configured; pass --dataset or set "
                         "dataset.path");
    DatasetSchema schema = schema_from_string(cfg.dataset_schema);
    std::vector<QuerySample> samples =
        load_samples_file(cfg.dataset_path, schema, warnings);
    if (cfg.dataset_variant == "raw") {
        if (!cfg.dataset_sidecar.empty())
            warn(warnings,
                 "dataset.sidecar is ignored for the raw variant");
        return corpus_from_samples(std::move(samples));
    }
    if (!cfg.dataset_sidecar.empty())
        apply_label_sidecar(samples, cfg.dataset_sidecar, warnings);
    return normalize_and_dedupe(std::move(samples));
}

namespace {

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw FatalError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw FatalError("short write to '" + path.string() + "'");
}

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FatalError(std::string("cannot open ") + what + " file '" +
                         path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path ensure_out_dir(const PipelineConfig& cfg) {
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    return out;
}

// Every command drops a manifest describing what it produced and the exact
// configuration that produced it.  Deliberately clock-free so reruns are
// byte-identical.
void write_manifest(const PipelineConfig& cfg, const fs::path& out,
                    const std::string& command,
                    std::vector<std::string> outputs,
                    const std::string& provider_identity,
                    const std::string& lexicon_version) {
    std::sort(outputs.begin(), outputs.end());
    nlohmann::json m;
    m["command"] = command;
    m["format"] = "attrib-manifest-v1";
    m["seed"] = cfg.seed;
    m["provider"] = provider_identity;
    m["lexicons"] = lexicon_version;
    m["outputs"] = outputs;
    write_text_file(out / "manifest.json", m.dump(2) + "\n");
    write_text_file(out / "effective.config", cfg.serialize());
}

int finish(const PipelineConfig& cfg, const Warnings& warnings) {
    for (const std::string& msg : warnings.items())
        std::cerr << "warning: " << msg << "\n";
    if (cfg.warnings_as_errors && !warnings.empty()) {
        std::cerr << "error: " << warnings.size()
                  << " warning(s) with warnings_as_errors set\n";
        return 1;
    }
    return 0;
}

nlohmann::json corpus_stats_json(const LabeledCorpus& corpus) {
    auto counts = corpus.class_counts();
    nlohmann::json j;
    j["samples"] = corpus.samples().size();
    j["sentences"] = corpus.size();
    j["class_counts"] = {{"zero", counts[0]},
                         {"one", counts[1]},
                         {"multi", counts[2]}};
    return j;
}

std::string format_stats(const SummaryStats& s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "median %.2f  iqr [%.2f, %.2f]", s.median,
                  s.q1, s.q3);
    return buf;
}

std::string confusion_csv(const ConfusionMatrix& m) {
    static const char* kNames[3] = {"zero", "one", "multi"};
    std::ostringstream os;
    os << "true\\pred,zero,one,multi\n";
    for (int r = 0; r < 3; ++r) {
        os << kNames[r];
        for (int c = 0; c < 3; ++c) {
            char buf[32];
            std::snprintf(buf, sizeof buf, ",%.6f", m[r][c]);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::vector<double> test_accuracies(const ExperimentSummary& s) {
    std::vector<double> v;
    v.reserve(s.runs.size());
    for (const RunMetrics& r : s.runs) v.push_back(r.test_accuracy);
    return v;
}

}  // namespace

int cmd_ingest(const PipelineConfig& cfg) {
    Warnings warnings;
    DatasetSchema schema = schema_from_string(cfg.dataset_schema);
    if (cfg.dataset_path.empty())
        throw FatalError("no dataset configured; pass --dataset or set "
                         "dataset.path");
    std::vector<QuerySample> samples =
        load_samples_file(cfg.dataset_path, schema, &warnings);
    LabeledCorpus corpus = corpus_from_samples(std::move(samples));

    fs::path out = ensure_out_dir(cfg);
    std::ostringstream body;
    write_corpus_jsonl(corpus, body);
    write_text_file(out / "corpus.jsonl", body.str());
    write_text_file(out / "stats.json", corpus_stats_json(corpus).dump(2) + "\n");
    write_manifest(cfg, out, "ingest", {"corpus.jsonl", "stats.json"}, "none",
                   "none");
    std::cout << "ingested " << corpus.samples().size() << " samples, "
              << corpus.size() << " sentence occurrences\n";
    return finish(cfg, warnings);
}

int cmd_clean(const PipelineConfig& cfg) {
    Warnings warnings;
    DatasetSchema schema = schema_from_string(cfg.dataset_schema);
    if (cfg.dataset_path.empty())
        throw FatalError("no dataset configured; pass --dataset or set "
                         "dataset.path");
    std::vector<QuerySample> samples =
        load_samples_file(cfg.dataset_path, schema, &warnings);
    std::int64_t before = sentence_count(samples);
    if (!cfg.dataset_sidecar.empty())
        apply_label_sidecar(samples, cfg.dataset_sidecar, &warnings);
    LabeledCorpus corpus = normalize_and_dedupe(std::move(samples));

    fs::path out = ensure_out_dir(cfg);
    std::ostringstream body;
    write_corpus_jsonl(corpus, body);
    write_text_file(out / "corpus.jsonl", body.str());
    nlohmann::json stats = corpus_stats_json(corpus);
    stats["sentences_before_dedupe"] = before;
    write_text_file(out / "stats.json", stats.dump(2) + "\n");
    write_manifest(cfg, out, "clean", {"corpus.jsonl", "stats.json"}, "none",
                   "none");
    std::cout << "cleaned corpus: " << before << " -> " << corpus.size()
              << " sentences\n";
    return finish(cfg, warnings);
}

int cmd_features(const PipelineConfig& cfg) {
    Warnings warnings;
    LabeledCorpus corpus = load_configured_corpus(cfg, &warnings);
    Lexicons lex = Lexicons::load_dir(cfg.lexicon_dir);

    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const SentenceEntry& e : corpus.sentences())
        texts.push_back(e.sentence.text);
    NgramModel bigram = NgramModel::fit(texts, 2);
    NgramModel trigram = NgramModel::fit(texts, 3);

    std::ostringstream csv;
    csv << "sample_id,sentence_id,label";
    for (const char* name : kFeatureNames) csv << ',' << name;
    csv << '\n';
    int last_sample = -1;
    int sentence_id = 0;
    for (const SentenceEntry& e : corpus.sentences()) {
        if (e.sample_index != last_sample) {
            last_sample = e.sample_index;
            sentence_id = 0;
        }
        FeatureVector fv =
            extract_features(e.sentence.text, bigram, trigram, lex);
        csv << corpus.samples()[e.sample_index].id << ',' << sentence_id++
            << ',' << to_string(e.sentence.ref_class);
        for (double v : fv.values) {
            char buf[40];
            std::snprintf(buf, sizeof buf, ",%.12g", v);
            csv << buf;
        }
        csv << '\n';
    }

    fs::path out = ensure_out_dir(cfg);
    write_text_file(out / "features.csv", csv.str());
    write_manifest(cfg, out, "features", {"features.csv"}, "none",
                   lex.version);
    std::cout << "wrote features for " << corpus.size() << " sentences\n";
    return finish(cfg, warnings);
}

int cmd_train(const PipelineConfig& cfg) {
    Warnings warnings;
    LabeledCorpus corpus = load_configured_corpus(cfg, &warnings);
    Lexicons lex = Lexicons::load_dir(cfg.lexicon_dir);

    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const SentenceEntry& e : corpus.sentences())
        texts.push_back(e.sentence.text);
    NgramModel bigram = NgramModel::fit(texts, 2);
    NgramModel trigram = NgramModel::fit(texts, 3);

    std::vector<FeatureVector> features;
    std::vector<RefClass> labels;
    features.reserve(corpus.size());
    labels.reserve(corpus.size());
    for (const SentenceEntry& e : corpus.sentences()) {
        features.push_back(
            extract_features(e.sentence.text, bigram, trigram, lex));
        labels.push_back(e.sentence.ref_class);
    }

    ForestParams params = cfg.forest;
    params.seed = cfg.seed;
    ModelBundle bundle;
    bundle.forest = fit_forest(features, labels, params);
    bundle.bigram = std::move(bigram);
    bundle.trigram = std::move(trigram);
    bundle.lexicon_version = lex.version;

    fs::path out = ensure_out_dir(cfg);
    std::string model_path =
        cfg.model_path.empty() ? (out / "model.json").string() : cfg.model_path;
    bundle.save(model_path);

    std::int64_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (bundle.forest.predict(features[i]) == labels[i]) ++correct;
    nlohmann::json stats;
    stats["training_sentences"] = corpus.size();
    stats["training_accuracy"] =
        100.0 * static_cast<double>(correct) /
        static_cast<double>(features.size());
    stats["model_fingerprint"] = bundle.forest.fingerprint();
    write_text_file(out / "train_stats.json", stats.dump(2) + "\n");

    std::vector<std::string> outputs = {"train_stats.json"};
    if (cfg.model_path.empty()) outputs.push_back("model.json");
    write_manifest(cfg, out, "train", outputs, "none", lex.version);
    std::cout << "trained forest on " << corpus.size() << " sentences -> "
              << model_path << "\n";
    return finish(cfg, warnings);
}

int cmd_evaluate(const PipelineConfig& cfg) {
    Warnings warnings;
    LabeledCorpus corpus = load_configured_corpus(cfg, &warnings);
    Lexicons lex = Lexicons::load_dir(cfg.lexicon_dir);

    bool do_pre = cfg.eval_mode == "pre_attribution" || cfg.eval_mode == "both";
    bool do_attr = cfg.eval_mode == "attribution" || cfg.eval_mode == "both";

    fs::path out = ensure_out_dir(cfg);
    std::vector<std::string> outputs;
    std::ostringstream table;
    std::string provider_identity = "none";

    if (do_pre) {
        PreAttributionOptions opt;
        opt.forest = cfg.forest;
        opt.runs = cfg.runs;
        opt.train_fraction = cfg.train_fraction;
        opt.base_seed = cfg.seed;
        ExperimentSummary summary =
            run_pre_attribution_experiment(corpus, lex, opt);
        write_text_file(out / "pre_attribution.json",
                        summary.to_json().dump(2) + "\n");
        write_text_file(out / "confusion.csv",
                        confusion_csv(summary.mean_confusion));
        outputs.push_back("pre_attribution.json");
        outputs.push_back("confusion.csv");
        table << "pre-attribution (" << summary.runs.size() << " runs)\n";
        table << "  train  " << format_stats(summary.train_stats) << "\n";
        table << "  test   " << format_stats(summary.test_stats) << "\n";
    }

    if (do_attr) {
        std::unique_ptr<EmbeddingProvider> provider = make_provider(cfg);
        provider_identity = provider->identity();
        auto run_method = [&](AttributionMethod method, bool pre) {
            AttributionOptions opt;
            opt.method = method;
            opt.pre_attribution = pre;
            opt.forest = cfg.forest;
            opt.runs = cfg.runs;
            opt.train_fraction = cfg.train_fraction;
            opt.base_seed = cfg.seed;
            opt.name = std::string(to_string(method)) +
                       (pre ? "_with_pre" : "_without_pre");
            return run_attribution_experiment(corpus, lex, *provider, opt);
        };
        nlohmann::json ja;
        for (AttributionMethod method :
             {AttributionMethod::ClosestOne, AttributionMethod::ClosestTwo}) {
            ExperimentSummary off = run_method(method, false);
            ExperimentSummary on = run_method(method, true);
            double p = significance_test(test_accuracies(on),
                                         test_accuracies(off));
            nlohmann::json jm;
            jm["without_pre_attribution"] = off.to_json();
            jm["with_pre_attribution"] = on.to_json();
            jm["p_value"] = p;
            ja[to_string(method)] = std::move(jm);
            table << "attribution " << to_string(method) << " ("
                  << on.runs.size() << " runs)\n";
            table << "  without pre-attribution  "
                  << format_stats(off.test_stats) << "\n";
            table << "  with pre-attribution     "
                  << format_stats(on.test_stats) << "\n";
            char buf[48];
            std::snprintf(buf, sizeof buf, "  p = %.6g\n", p);
            table << buf;
        }
        write_text_file(out / "attribution.json", ja.dump(2) + "\n");
        outputs.push_back("attribution.json");
    }

    write_text_file(out / "results.txt", table.str());
    outputs.push_back("results.txt");
    write_manifest(cfg, out, "evaluate", outputs, provider_identity,
                   lex.version);
    std::cout << table.str();
    return finish(cfg, warnings);
}

int cmd_attribute(const PipelineConfig& cfg) {
    Warnings warnings;
    fs::path out = ensure_out_dir(cfg);
    std::string model_path =
        cfg.model_path.empty() ? (out / "model.json").string() : cfg.model_path;
    ModelBundle bundle = ModelBundle::load(model_path);
    Lexicons lex = Lexicons::load_dir(cfg.lexicon_dir);
    if (lex.version != bundle.lexicon_version)
        throw FatalError("model was trained with lexicons '" +
                         bundle.lexicon_version + "' but '" + lex.version +
                         "' are loaded; retrain or fix lexicons.dir");

    if (cfg.document_path.empty())
        throw FatalError("no document configured; pass --document");
    if (cfg.answer_path.empty())
        throw FatalError("no answer configured; pass --answer");
    std::string document = read_text_file(cfg.document_path, "document");
    std::string answer = read_text_file(cfg.answer_path, "answer");

    std::unique_ptr<EmbeddingProvider> provider = make_provider(cfg);
    FeatureContext ctx{&lex, &bundle.bigram, &bundle.trigram};
    AttributionReport report = attribute_document(
        answer, document, bundle.forest, ctx, *provider, &warnings);

    write_text_file(out / "report.txt", report.to_text());
    write_text_file(out / "report.json", report.to_json().dump(2) + "\n");
    write_manifest(cfg, out, "attribute", {"report.txt", "report.json"},
                   provider->identity(), lex.version);
    std::cout << report.to_text();
    if (!report.complete) {
        std::cerr << "error: some sentences could not be attributed\n";
        return 1;
    }
    return finish(cfg, warnings);
}

}  // namespace attrib
