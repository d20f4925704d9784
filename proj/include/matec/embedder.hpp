#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace matec {

class Embedder {
public:
    virtual ~Embedder() = default;
    // Unit-normalized embedding. Throws Error("EmptyText") for empty input and
    // Error("BackendError") when a remote provider fails.
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
    // Persisted with a store so vectors from different embedders never mix.
    virtual std::string id() const = 0;
};

// Deterministic feature-hash embedding: lowercase alphanumeric tokens hashed
// with FNV-1a into `dimension` buckets with a hash-derived sign, then
// L2-normalized.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const override { return dimension_; }
    std::string id() const override { return "hash-fnv1a-" + std::to_string(dimension_); }

private:
    std::size_t dimension_;
};

struct HttpEmbedderConfig {
    std::string base_url;  // e.g. "https://api.example.com/v1"
    std::string model;
    std::string api_key;
    std::size_t dimension = 0;
    int timeout_ms = 30000;
};

// Calls an embeddings endpoint speaking the common "/embeddings" wire format.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {}
    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const override { return config_.dimension; }
    std::string id() const override { return "http-" + config_.model; }

private:
    HttpEmbedderConfig config_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);
void normalize_in_place(std::vector<double>& v);

} // namespace matec
