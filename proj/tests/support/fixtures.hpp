#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "factalign/error.hpp"
#include "factalign/model.hpp"

/// Expects `stmt` to throw factalign::Error of the given kind.
#define EXPECT_ERROR_KIND(stmt, expected_kind) \
  EXPECT_EQ(::fixtures::error_kind_of([&] { (void)(stmt); }), std::optional<::factalign::ErrorKind>(expected_kind))

namespace fixtures {

template <typename F>
std::optional<factalign::ErrorKind> error_kind_of(F&& f) {
  try {
    f();
  } catch (const factalign::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("factalign-test-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline factalign::Annotation annotation(std::string id, std::vector<std::string> facts,
                                        std::string document = "doc", std::string annotator = "ann",
                                        std::string guideline = "g1") {
  factalign::Annotation a;
  a.id = std::move(id);
  a.document_id = std::move(document);
  a.annotator_id = std::move(annotator);
  a.guideline_version_id = std::move(guideline);
  a.created_at = factalign::Timestamp::parse("2024-01-01T00:00:00Z");
  for (auto& f : facts) a.facts.push_back(factalign::Fact{std::move(f), {}});
  return a;
}

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Row-major similarity values. With dyadic set, entries are k/16 so that
/// sums are exact and ties are frequent.
inline std::vector<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols, bool dyadic) {
  std::vector<double> values(rows * cols);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& v : values) {
    v = dyadic ? static_cast<double>(uniform(rng, 0, 16)) / 16.0 : unit(rng);
  }
  return values;
}

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "applicant", "permit",   "residence", "office",  "deadline", "payment",   "document",
      "certificate", "passport", "address", "income",  "tax",      "vehicle",   "license",
      "student",   "pension",  "benefit",   "housing", "contract", "insurance", "registration",
      "submit",    "request",  "receive",   "provide", "confirm",  "renew",     "apply"};
  return words;
}

/// Short lowercase phrase drawn from the shared vocabulary.
inline std::string random_phrase(Rng& rng, std::size_t min_words = 2, std::size_t max_words = 5) {
  const auto& words = vocabulary();
  const std::size_t n = uniform(rng, min_words, max_words);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[uniform(rng, 0, words.size() - 1)];
  }
  return out;
}

inline std::vector<std::string> random_fact_list(Rng& rng, std::size_t min_facts, std::size_t max_facts) {
  std::vector<std::string> facts;
  const std::size_t n = uniform(rng, min_facts, max_facts);
  for (std::size_t i = 0; i < n; ++i) facts.push_back(random_phrase(rng));
  return facts;
}

}  // namespace fixtures
