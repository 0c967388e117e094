#include "factalign/embedding.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "factalign/error.hpp"
#include "factalign/text.hpp"

namespace factalign {

using nlohmann::json;

EmbeddingVector EmbeddingVector::normalize(std::vector<double> raw) {
  double sq = 0.0;
  for (double x : raw) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "non-finite embedding component");
    sq += x * x;
  }
  if (sq <= 0.0) throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero vector");
  const double norm = std::sqrt(sq);
  for (double& x : raw) x /= norm;
  return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  double sq = 0.0;
  for (double x : values) sq += x * x;
  if (!std::isfinite(sq) || std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
    throw Error(ErrorKind::InvalidArgument, "vector is not unit-norm");
  }
  return EmbeddingVector(std::move(values));
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "cosine of vectors with dimensions " +
                                                  std::to_string(u.dimension()) + " and " +
                                                  std::to_string(v.dimension()));
  }
  const auto a = u.values();
  const auto b = v.values();
  // Identical vectors score exactly 1 so that identical texts match at any threshold.
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

std::size_t trigram_bucket(std::u32string_view trigram, std::size_t dimension) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char byte : utf8::encode(trigram)) {
    h ^= byte;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h % dimension);
}

namespace {

// Unnormalized trigram histogram; normalizing it yields the fallback embedding.
std::vector<double> trigram_counts(std::string_view text, std::size_t dimension) {
  if (dimension < 16) throw Error(ErrorKind::InvalidArgument, "fallback dimension must be >= 16");
  const std::string normalized = normalize_label(text);
  if (normalized.empty()) throw Error(ErrorKind::EmptyText, "cannot embed empty text");
  std::u32string padded = U" " + utf8::decode(normalized) + U" ";
  std::vector<double> counts(dimension, 0.0);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    counts[trigram_bucket(std::u32string_view(padded).substr(i, 3), dimension)] += 1.0;
  }
  return counts;
}

}  // namespace

EmbeddingVector fallback_embed(std::string_view text, std::size_t dimension) {
  return EmbeddingVector::normalize(trigram_counts(text, dimension));
}

FallbackEmbedder::FallbackEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension < 16) throw Error(ErrorKind::InvalidArgument, "fallback dimension must be >= 16");
}

std::string FallbackEmbedder::id() const {
  return "fallback-trigram-v1-d" + std::to_string(dimension_);
}

std::vector<std::vector<double>> FallbackEmbedder::compute(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(trigram_counts(t, dimension_));
  return out;
}

TableProvider::TableProvider(std::string id, std::size_t dimension)
    : id_(std::move(id)), dimension_(dimension) {}

void TableProvider::set(const std::string& text, std::vector<double> vector) {
  table_[text] = std::move(vector);
}

std::vector<std::vector<double>> TableProvider::compute(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = table_.find(t);
    if (it == table_.end()) throw Error(ErrorKind::InvalidArgument, "no table entry for text: " + t);
    out.push_back(it->second);
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpProviderOptions options)
    : options_(std::move(options)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.max_in_flight))) {
  if (options_.dimension == 0) throw Error(ErrorKind::InvalidArgument, "provider dimension must be > 0");
  const auto scheme_end = options_.base_url.find("://");
  const auto path_start =
      options_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = options_.base_url;
  } else {
    scheme_host_port_ = options_.base_url.substr(0, path_start);
    path_prefix_ = options_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

std::vector<std::vector<double>> HttpEmbeddingProvider::compute(std::span<const std::string> texts) {
  const json request = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};

  in_flight_.acquire();
  httplib::Result res;
  {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    res = client.Post(path_prefix_ + "/embed", request.dump(), "application/json");
  }
  in_flight_.release();

  if (!res) {
    throw Error(ErrorKind::ProviderUnavailable,
                "embedding provider unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::ProviderUnavailable,
                "embedding provider returned HTTP " + std::to_string(res->status));
  }
  std::vector<std::vector<double>> vectors;
  try {
    vectors = json::parse(res->body).at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProviderUnavailable, std::string("malformed provider response: ") + e.what());
  }
  if (vectors.size() != texts.size()) {
    throw Error(ErrorKind::ProviderUnavailable, "provider returned " + std::to_string(vectors.size()) +
                                                    " vectors for " + std::to_string(texts.size()) +
                                                    " texts");
  }
  return vectors;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::StorageFailure, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path jsonl_path) : path_(std::move(jsonl_path)) {
  std::ifstream in(*path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A torn final line from an interrupted append is skipped.
    try {
      const auto rec = json::parse(line);
      entries_.insert_or_assign(
          {rec.at("provider").get<std::string>(), rec.at("text_sha256").get<std::string>()},
          EmbeddingVector::from_unit(rec.at("vector").get<std::vector<double>>()));
    } catch (const std::exception&) {
      continue;
    }
  }
}

std::optional<EmbeddingVector> EmbeddingCache::find(const std::string& provider_id,
                                                    const std::string& text_sha256) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find({provider_id, text_sha256});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const std::string& provider_id, const std::string& text_sha256,
                            const EmbeddingVector& vector) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign({provider_id, text_sha256}, vector);
  if (!path_) return;

  const json rec = {{"provider", provider_id},
                    {"text_sha256", text_sha256},
                    {"vector", std::vector<double>(vector.values().begin(), vector.values().end())}};
  const std::string line = rec.dump() + "\n";
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  // One O_APPEND write per record keeps concurrent appends from interleaving.
  const int fd = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(ErrorKind::StorageFailure, "cannot open embedding cache " + path_->string());
  const auto written = ::write(fd, line.data(), line.size());
  ::close(fd);
  if (written != static_cast<ssize_t>(line.size())) {
    throw Error(ErrorKind::StorageFailure, "short write to embedding cache " + path_->string());
  }
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<EmbeddingVector> embed_texts(EmbeddingProvider& provider,
                                         std::span<const std::string> texts,
                                         EmbeddingCache* cache) {
  const std::string provider_id = provider.id();
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) {
    if (trim(t).empty()) throw Error(ErrorKind::EmptyText, "cannot embed empty text");
    keys.push_back(sha256_hex(t));
  }

  std::unordered_map<std::string, EmbeddingVector> resolved;
  std::vector<std::string> missing_texts;
  std::vector<std::string> missing_keys;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (resolved.contains(keys[i])) continue;
    if (cache) {
      if (auto hit = cache->find(provider_id, keys[i])) {
        resolved.emplace(keys[i], std::move(*hit));
        continue;
      }
    }
    if (std::find(missing_keys.begin(), missing_keys.end(), keys[i]) != missing_keys.end()) continue;
    missing_texts.push_back(texts[i]);
    missing_keys.push_back(keys[i]);
  }

  if (!missing_texts.empty()) {
    auto raw = provider.compute(missing_texts);
    if (raw.size() != missing_texts.size()) {
      throw Error(ErrorKind::ProviderUnavailable, "provider returned the wrong number of vectors");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].size() != provider.dimension()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "provider '" + provider_id + "' returned a vector of length " +
                        std::to_string(raw[i].size()) + ", expected " +
                        std::to_string(provider.dimension()));
      }
      auto vec = EmbeddingVector::normalize(std::move(raw[i]));
      if (cache) cache->insert(provider_id, missing_keys[i], vec);
      resolved.emplace(missing_keys[i], std::move(vec));
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& k : keys) out.push_back(resolved.at(k));
  return out;
}

}  // namespace factalign
