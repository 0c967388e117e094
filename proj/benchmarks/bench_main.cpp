#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "factalign/matching.hpp"

namespace {

using namespace factalign;

SimilarityMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> values(n * n);
  for (auto& v : values) v = unit(rng);
  return SimilarityMatrix(n, n, std::move(values));
}

std::vector<std::string> phrases(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> words = {"applicant", "permit", "residence", "office", "deadline",
                                                 "payment",   "passport", "address", "income", "license"};
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string p;
    for (int w = 0; w < 4; ++w) p += (w ? " " : "") + words[rng() % words.size()];
    out.push_back(p + " " + std::to_string(i));
  }
  return out;
}

void BM_OptimalAssignment(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 42);
  for (auto _ : state) benchmark::DoNotOptimize(optimal_assignment(m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OptimalAssignment)->RangeMultiplier(2)->Range(4, 128)->Complexity();

void BM_FallbackEmbed(benchmark::State& state) {
  const std::string text = "The applicant must submit the residence permit application before the deadline.";
  for (auto _ : state) benchmark::DoNotOptimize(fallback_embed(text, FallbackEmbedder::kDefaultDimension));
}
BENCHMARK(BM_FallbackEmbed);

void BM_MatchAnnotations(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Annotation a;
  Annotation b;
  a.id = "a";
  b.id = "b";
  for (const auto& p : phrases(n, 1)) a.facts.push_back({p, {}});
  for (const auto& p : phrases(n, 2)) b.facts.push_back({p, {}});
  FallbackEmbedder provider;
  EmbeddingCache cache;
  Embedder embedder(provider, &cache);
  for (auto _ : state) benchmark::DoNotOptimize(match_annotations(a, b, embedder));
}
BENCHMARK(BM_MatchAnnotations)->Arg(8)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
