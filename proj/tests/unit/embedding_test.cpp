#include "factalign/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace factalign;

namespace {

double norm(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v.values()) s += x * x;
  return std::sqrt(s);
}

bool bit_identical(const EmbeddingVector& a, const EmbeddingVector& b) {
  return a.dimension() == b.dimension() &&
         std::memcmp(a.values().data(), b.values().data(), a.dimension() * sizeof(double)) == 0;
}

// Counts compute() calls so cache hits are observable.
class CountingProvider final : public EmbeddingProvider {
 public:
  std::string id() const override { return inner_.id(); }
  std::size_t dimension() const override { return inner_.dimension(); }
  std::vector<std::vector<double>> compute(std::span<const std::string> texts) override {
    ++calls;
    texts_seen += texts.size();
    return inner_.compute(texts);
  }

  int calls = 0;
  std::size_t texts_seen = 0;

 private:
  FallbackEmbedder inner_{64};
};

}  // namespace

TEST(Cosine, HandComputedValues) {
  const auto u = EmbeddingVector::normalize({1.0, 0.0});
  const auto v = EmbeddingVector::normalize({0.6, 0.8});
  const auto w = EmbeddingVector::normalize({0.0, 3.0});
  EXPECT_DOUBLE_EQ(cosine_similarity(u, u), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(u, w), 0.0);
  EXPECT_NEAR(cosine_similarity(u, v), 0.6, 1e-15);
}

TEST(Cosine, DimensionMismatchThrows) {
  const auto u = EmbeddingVector::normalize({1.0, 0.0});
  const auto v = EmbeddingVector::normalize({1.0, 0.0, 0.0});
  EXPECT_ERROR_KIND(cosine_similarity(u, v), ErrorKind::DimensionMismatch);
}

TEST(Normalize, RejectsZeroAndNonFinite) {
  EXPECT_ERROR_KIND(EmbeddingVector::normalize({0.0, 0.0}), ErrorKind::InvalidArgument);
  EXPECT_ERROR_KIND(EmbeddingVector::normalize({NAN, 1.0}), ErrorKind::InvalidArgument);
  EXPECT_ERROR_KIND(EmbeddingVector::from_unit({0.5, 0.5}), ErrorKind::InvalidArgument);
}

TEST(Fallback, IdenticalTextGivesCosineOne) {
  const auto a = fallback_embed("abc", 512);
  const auto b = fallback_embed("abc", 512);
  EXPECT_TRUE(bit_identical(a, b));
  EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-12);
}

TEST(Fallback, DisjointTrigramsInDistinctBucketsGiveZero) {
  const std::u32string aa[] = {U" aa", U"aaa", U"aa "};
  const std::u32string zz[] = {U" zz", U"zzz", U"zz "};
  std::set<std::size_t> buckets_a;
  std::set<std::size_t> buckets_z;
  for (const auto& t : aa) buckets_a.insert(trigram_bucket(t, 256));
  for (const auto& t : zz) buckets_z.insert(trigram_bucket(t, 256));
  for (auto b : buckets_a) ASSERT_EQ(buckets_z.count(b), 0u) << "hash collision at dimension 256";
  EXPECT_EQ(cosine_similarity(fallback_embed("aaaa", 256), fallback_embed("zzzz", 256)), 0.0);
}

TEST(Fallback, CaseAndWhitespaceInsensitive) {
  EXPECT_TRUE(bit_identical(fallback_embed("Antrag  Stellen", 128), fallback_embed(" antrag stellen ", 128)));
}

TEST(Fallback, UnitNormAndErrors) {
  EXPECT_NEAR(norm(fallback_embed("Wohngeld beantragen", 512)), 1.0, 1e-12);
  EXPECT_ERROR_KIND(fallback_embed("", 512), ErrorKind::EmptyText);
  EXPECT_ERROR_KIND(fallback_embed("   ", 512), ErrorKind::EmptyText);
  EXPECT_ERROR_KIND(fallback_embed("abc", 8), ErrorKind::InvalidArgument);
  EXPECT_EQ(FallbackEmbedder(256).id(), "fallback-trigram-v1-d256");
}

TEST(EmbedTexts, EmptyInputAndDuplicates) {
  FallbackEmbedder provider;
  EXPECT_TRUE(embed_texts(provider, {}).empty());
  const std::vector<std::string> texts = {"a", "a"};
  const auto out = embed_texts(provider, texts);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_TRUE(bit_identical(out[0], out[1]));
}

TEST(EmbedTexts, BlankTextThrows) {
  FallbackEmbedder provider;
  const std::vector<std::string> texts = {"ok", " "};
  EXPECT_ERROR_KIND(embed_texts(provider, texts), ErrorKind::EmptyText);
}

TEST(EmbedTexts, CacheServesRepeatedTexts) {
  CountingProvider provider;
  EmbeddingCache cache;
  const std::vector<std::string> first = {"x y", "z w", "x y"};
  embed_texts(provider, first, &cache);
  EXPECT_EQ(provider.calls, 1);
  EXPECT_EQ(provider.texts_seen, 2u);
  EXPECT_EQ(cache.size(), 2u);
  const std::vector<std::string> second = {"z w", "new"};
  embed_texts(provider, second, &cache);
  EXPECT_EQ(provider.texts_seen, 3u);
}

TEST(EmbedTexts, WrongDimensionFromProviderIsRejected) {
  TableProvider provider("t", 3);
  provider.set("a", {1.0, 0.0});
  const std::vector<std::string> texts = {"a"};
  EXPECT_ERROR_KIND(embed_texts(provider, texts), ErrorKind::DimensionMismatch);
}

TEST(Cache, VectorsSurviveReloadBitForBit) {
  fixtures::TempDir dir;
  const auto path = dir.path() / "embeddings.jsonl";
  FallbackEmbedder provider;
  const std::vector<std::string> texts = {"Antrag stellen", "Nachweis einreichen"};
  std::vector<EmbeddingVector> before;
  {
    EmbeddingCache cache(path);
    before = embed_texts(provider, texts, &cache);
  }
  EmbeddingCache reloaded(path);
  ASSERT_EQ(reloaded.size(), 2u);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto hit = reloaded.find(provider.id(), sha256_hex(texts[i]));
    ASSERT_TRUE(hit.has_value());
    EXPECT_TRUE(bit_identical(*hit, before[i]));
    EXPECT_TRUE(bit_identical(*hit, fallback_embed(texts[i], provider.dimension())));
  }
}

TEST(Cache, CorruptLinesAreSkipped) {
  fixtures::TempDir dir;
  const auto path = dir.path() / "embeddings.jsonl";
  {
    EmbeddingCache cache(path);
    cache.insert("p", sha256_hex("a"), EmbeddingVector::normalize({1.0, 1.0}));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "{not json\n";
  }
  EmbeddingCache reloaded(path);
  EXPECT_EQ(reloaded.size(), 1u);
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(HttpProvider, UnreachableEndpointIsProviderUnavailable) {
  HttpProviderOptions opts;
  opts.base_url = "http://127.0.0.1:1";
  opts.dimension = 4;
  opts.timeout = std::chrono::milliseconds(500);
  HttpEmbeddingProvider provider(opts);
  const std::vector<std::string> texts = {"a"};
  EXPECT_ERROR_KIND(provider.compute(texts), ErrorKind::ProviderUnavailable);
}
