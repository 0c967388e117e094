#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace factalign {

/// Unit-norm embedding. Construction normalizes; the norm is 1 within 1e-6.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  /// L2-normalizes raw provider output. Throws InvalidArgument for a zero
  /// or non-finite vector.
  static EmbeddingVector normalize(std::vector<double> raw);

  /// Wraps values that are already unit-norm (cache entries) without
  /// rescaling, so that cached vectors stay bit-identical.
  static EmbeddingVector from_unit(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

/// Cosine of two unit vectors: their dot product, clamped to [-1, 1].
/// Throws DimensionMismatch.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

/// A source of raw embeddings. The same id and text must always yield the
/// same vector; remote providers rely on EmbeddingCache for that.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;

  /// One raw (not necessarily normalized) vector per input text.
  virtual std::vector<std::vector<double>> compute(std::span<const std::string> texts) = 0;
};

/// Hashed character-trigram frequency vector of the case-folded,
/// whitespace-collapsed text padded with one space on each side.
/// Throws EmptyText for blank input and InvalidArgument for dimension < 16.
EmbeddingVector fallback_embed(std::string_view text, std::size_t dimension);

/// Trigram bucket of the fallback embedder (FNV-1a over the UTF-8 bytes).
std::size_t trigram_bucket(std::u32string_view trigram, std::size_t dimension);

/// Offline deterministic provider backed by fallback_embed.
class FallbackEmbedder final : public EmbeddingProvider {
 public:
  explicit FallbackEmbedder(std::size_t dimension = kDefaultDimension);

  static constexpr std::size_t kDefaultDimension = 512;

  std::string id() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<std::vector<double>> compute(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

/// Provider with an explicit text -> vector table. Used for synthetic
/// experiments where similarities must be planted exactly.
class TableProvider final : public EmbeddingProvider {
 public:
  TableProvider(std::string id, std::size_t dimension);

  void set(const std::string& text, std::vector<double> vector);

  std::string id() const override { return id_; }
  std::size_t dimension() const override { return dimension_; }
  /// Throws InvalidArgument for texts without an entry.
  std::vector<std::vector<double>> compute(std::span<const std::string> texts) override;

 private:
  std::string id_;
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

struct HttpProviderOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8080" or with a path prefix
  std::string provider_id = "http";
  std::size_t dimension = 0;
  std::chrono::milliseconds timeout{10000};
  std::size_t max_in_flight = 4;
};

/// Remote provider speaking POST {base}/embed {"texts": [...]} ->
/// {"vectors": [[...], ...]}. Failures surface as ProviderUnavailable.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpProviderOptions options);

  std::string id() const override { return options_.provider_id; }
  std::size_t dimension() const override { return options_.dimension; }
  std::vector<std::vector<double>> compute(std::span<const std::string> texts) override;

 private:
  HttpProviderOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::counting_semaphore<> in_flight_;
};

std::string sha256_hex(std::string_view data);

/// Content-addressed embedding cache keyed by (provider id, sha256(text)).
/// With a path, entries persist as JSON lines
/// {"provider", "text_sha256", "vector"}; later lines win on reload.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path jsonl_path);

  std::optional<EmbeddingVector> find(const std::string& provider_id,
                                      const std::string& text_sha256) const;
  void insert(const std::string& provider_id, const std::string& text_sha256,
              const EmbeddingVector& vector);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, EmbeddingVector> entries_;
};

/// Embeds texts through a provider, consulting and filling the cache.
/// Throws EmptyText, DimensionMismatch, ProviderUnavailable.
std::vector<EmbeddingVector> embed_texts(EmbeddingProvider& provider,
                                         std::span<const std::string> texts,
                                         EmbeddingCache* cache = nullptr);

/// Provider plus optional cache; the handle every pipeline stage embeds through.
class Embedder {
 public:
  explicit Embedder(EmbeddingProvider& provider, EmbeddingCache* cache = nullptr)
      : provider_(&provider), cache_(cache) {}

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const {
    return embed_texts(*provider_, texts, cache_);
  }

  EmbeddingProvider& provider() const { return *provider_; }

 private:
  EmbeddingProvider* provider_;
  EmbeddingCache* cache_;
};

}  // namespace factalign
