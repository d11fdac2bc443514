#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "attrib/common.hpp"

namespace attrib {

// Unit-length (L2) dense vector.  Degenerate inputs that would hash or embed
// to the zero vector are mapped to the first basis vector and flagged.
struct EmbeddingVector {
    std::vector<double> values;
    bool degenerate = false;

    std::size_t dim() const { return values.size(); }
};

double l2_norm(const std::vector<double>& v);

// Scales to unit length; a zero vector becomes e0 with the degenerate flag.
EmbeddingVector normalize_embedding(std::vector<double> raw);

// 1 - dot(a, b) for unit vectors, clamped to [0, 2].  Dimension mismatch is
// fatal.
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // Stable identity string recorded in manifests and cache keys.
    virtual std::string identity() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) = 0;

    EmbeddingVector embed(const std::string& text);
};

// Deterministic offline embedder: character 3/4/5-grams over the lowercased,
// whitespace-collapsed byte sequence, FNV-1a hashed into 512 buckets, then
// L2-normalized.
class BuiltinHashProvider : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 512;

    std::string identity() const override { return "builtin-hash-v1"; }
    std::size_t dimension() const override { return kDim; }
    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override;
};

struct ExternalServiceConfig {
    std::string host = "127.0.0.1";
    int port = 0;
    std::string path = "/embed";
    std::string identity = "external";
    // 0 = accept whatever dimension the first response reports.
    std::size_t expected_dim = 0;
    int timeout_ms = 5000;
    // Empty disables the on-disk cache.
    std::string cache_dir;
};

// HTTP embedding client.  POSTs {"texts": [...]} and expects
// {"vectors": [[...], ...]}.  Transport failures raise RetriableError;
// malformed responses and dimension drift raise FatalError.  Responses are
// cached on disk keyed by (identity, sha256(text)) with atomic
// write-then-rename so concurrent processes never observe partial files.
class ExternalServiceProvider : public EmbeddingProvider {
public:
    explicit ExternalServiceProvider(ExternalServiceConfig config);

    std::string identity() const override { return config_.identity; }
    std::size_t dimension() const override { return dim_; }
    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) override;

    // Exposed for tests: cache file path for a text, empty when caching off.
    std::string cache_path(const std::string& text) const;

private:
    std::vector<std::vector<double>> fetch(
        const std::vector<std::string>& texts);

    ExternalServiceConfig config_;
    std::size_t dim_ = 0;
};

}  // namespace attrib
