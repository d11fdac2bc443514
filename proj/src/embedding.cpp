#include "attrib/embedding.hpp"

#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "attrib/rng.hpp"
#include "attrib/sha256.hpp"
#include "httplib.h"
#include "json.hpp"

namespace attrib {

namespace fs = std::filesystem;
using nlohmann::json;

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

EmbeddingVector normalize_embedding(std::vector<double> raw) {
    if (raw.empty()) throw FatalError("cannot normalize an empty vector");
    for (double x : raw)
        if (!std::isfinite(x))
            throw FatalError("non-finite component in embedding vector");
    double n = l2_norm(raw);
    EmbeddingVector out;
    if (n < 1e-12) {
        out.values.assign(raw.size(), 0.0);
        out.values[0] = 1.0;
        out.degenerate = true;
        return out;
    }
    for (double& x : raw) x /= n;
    out.values = std::move(raw);
    return out;
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw FatalError("embedding dimension mismatch: " +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
    if (a.dim() == 0) throw FatalError("empty embedding vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        dot += a.values[i] * b.values[i];
    double d = 1.0 - dot;
    if (d < 0.0) d = 0.0;
    if (d > 2.0) d = 2.0;
    return d;
}

EmbeddingVector EmbeddingProvider::embed(const std::string& text) {
    auto batch = embed_batch({text});
    if (batch.size() != 1)
        throw FatalError("embedding provider returned wrong batch size");
    return std::move(batch[0]);
}

namespace {

std::string canonical_bytes(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
            c == '\v') {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(
            c < 0x80 ? std::tolower(c) : c));
    }
    return out;
}

}  // namespace

std::vector<EmbeddingVector> BuiltinHashProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::string bytes = canonical_bytes(text);
        std::vector<double> raw(kDim, 0.0);
        bool any = false;
        for (std::size_t n = 3; n <= 5; ++n) {
            if (bytes.size() < n) break;
            for (std::size_t i = 0; i + n <= bytes.size(); ++i) {
                std::uint64_t h = fnv1a64(bytes.data() + i, n);
                raw[h % kDim] += 1.0;
                any = true;
            }
        }
        if (!any) {
            EmbeddingVector v;
            v.values.assign(kDim, 0.0);
            v.values[0] = 1.0;
            v.degenerate = true;
            out.push_back(std::move(v));
            continue;
        }
        out.push_back(normalize_embedding(std::move(raw)));
    }
    return out;
}

ExternalServiceProvider::ExternalServiceProvider(ExternalServiceConfig config)
    : config_(std::move(config)), dim_(config_.expected_dim) {
    if (config_.port <= 0)
        throw FatalError("external embedding service needs a port");
    if (!config_.cache_dir.empty()) fs::create_directories(config_.cache_dir);
}

std::string ExternalServiceProvider::cache_path(
    const std::string& text) const {
    if (config_.cache_dir.empty()) return {};
    std::string ident;
    for (char c : config_.identity)
        ident.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return (fs::path(config_.cache_dir) /
            (ident + "-" + sha256_hex(text) + ".json"))
        .string();
}

std::vector<std::vector<double>> ExternalServiceProvider::fetch(
    const std::vector<std::string>& texts) {
    httplib::Client cli(config_.host, config_.port);
    cli.set_connection_timeout(0, config_.timeout_ms * 1000);
    cli.set_read_timeout(config_.timeout_ms / 1000,
                         (config_.timeout_ms % 1000) * 1000);

    json req;
    req["texts"] = texts;
    auto res = cli.Post(config_.path, req.dump(), "application/json");
    if (!res)
        throw RetriableError("embedding service unreachable at " +
                             config_.host + ":" + std::to_string(config_.port));
    if (res->status != 200)
        throw RetriableError("embedding service returned HTTP " +
                             std::to_string(res->status));

    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("vectors"))
        throw FatalError("embedding service response is not a vectors object");
    const json& vecs = body["vectors"];
    if (!vecs.is_array() || vecs.size() != texts.size())
        throw FatalError("embedding service returned " +
                         std::to_string(vecs.size()) + " vectors for " +
                         std::to_string(texts.size()) + " texts");

    std::vector<std::vector<double>> out;
    out.reserve(vecs.size());
    for (const json& v : vecs) {
        if (!v.is_array() || v.empty())
            throw FatalError("embedding service returned a non-array vector");
        std::vector<double> row;
        row.reserve(v.size());
        for (const json& x : v) {
            if (!x.is_number())
                throw FatalError(
                    "embedding service returned a non-numeric component");
            row.push_back(x.get<double>());
        }
        if (dim_ == 0) dim_ = row.size();
        if (row.size() != dim_)
            throw FatalError("embedding service dimension changed from " +
                             std::to_string(dim_) + " to " +
                             std::to_string(row.size()));
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<EmbeddingVector> ExternalServiceProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> misses;

    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string path = cache_path(texts[i]);
        if (path.empty() || !fs::exists(path)) {
            misses.push_back(i);
            continue;
        }
        std::ifstream in(path);
        json entry = json::parse(in, nullptr, false);
        if (entry.is_discarded() || !entry.contains("vector")) {
            misses.push_back(i);
            continue;
        }
        std::vector<double> raw =
            entry["vector"].get<std::vector<double>>();
        if (dim_ == 0) dim_ = raw.size();
        if (raw.size() != dim_)
            throw FatalError("cached embedding dimension mismatch in " + path);
        out[i] = normalize_embedding(std::move(raw));
    }

    if (!misses.empty()) {
        std::vector<std::string> pending;
        pending.reserve(misses.size());
        for (std::size_t i : misses) pending.push_back(texts[i]);
        auto fetched = fetch(pending);
        for (std::size_t k = 0; k < misses.size(); ++k) {
            std::size_t i = misses[k];
            std::string path = cache_path(texts[i]);
            if (!path.empty()) {
                json entry;
                entry["identity"] = config_.identity;
                entry["text_sha256"] = sha256_hex(texts[i]);
                entry["vector"] = fetched[k];
                std::string tmp = path + ".tmp" +
                                  std::to_string(::getpid());
                {
                    std::ofstream f(tmp, std::ios::trunc);
                    f << entry.dump();
                    if (!f) throw FatalError("cannot write cache file " + tmp);
                }
                fs::rename(tmp, path);
            }
            out[i] = normalize_embedding(std::move(fetched[k]));
        }
    }
    return out;
}

}  // namespace attrib
