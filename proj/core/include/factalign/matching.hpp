#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/embedding.hpp"
#include "factalign/model.hpp"

namespace factalign {

/// Row-major |A| x |B| matrix of cosine similarities.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  SimilarityMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> values() const { return values_; }

  SimilarityMatrix transposed() const;

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

using Assignment = std::vector<IndexPair>;

struct MatchResult {
  std::string annotation_a_id;
  std::string annotation_b_id;
  SimilarityMatrix matrix;
  Assignment assignment;
  Assignment matches;
  double threshold = 0.0;
  double iaa = 0.0;
};

inline constexpr double kDefaultThreshold = 0.7;

/// values[i][j] = cosine_similarity(a[i], b[j]). Throws DimensionMismatch.
SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> a,
                                   std::span<const EmbeddingVector> b);

/// Maximum-total-similarity one-to-one assignment of size min(rows, cols),
/// sorted by row. Solved as a min-cost problem on cost = 1 - similarity,
/// padded to square with cost-1 dummies. Among optimal assignments the
/// lexicographically smallest (row, col) sequence is returned.
/// Throws NonFiniteEntry.
Assignment optimal_assignment(const SimilarityMatrix& matrix);

/// Sum of matrix entries over the assignment, accumulated in row order.
double assignment_total(const SimilarityMatrix& matrix, const Assignment& assignment);

/// Keeps the pairs whose similarity is >= threshold, order preserved.
Assignment filter_matches(const Assignment& assignment, const SimilarityMatrix& matrix,
                          double threshold);

/// match_count / (size_a + size_b - match_count); 1.0 when both are empty.
/// Throws InvalidCounts when match_count > min(size_a, size_b).
double jaccard_iaa(std::size_t size_a, std::size_t size_b, std::size_t match_count);

/// Full pipeline: embed, similarity matrix, assignment, threshold, Jaccard.
/// The assignment is solved in a canonical orientation (by fact-text
/// sequence) and mapped back, so iaa(a, b) == iaa(b, a) exactly.
/// Throws InvalidArgument for a threshold outside [0, 1].
MatchResult match_annotations(const Annotation& a, const Annotation& b, const Embedder& embedder,
                              double threshold = kDefaultThreshold);

/// Same pipeline on precomputed embeddings.
MatchResult match_embeddings(const std::string& a_id, std::span<const EmbeddingVector> a,
                             const std::vector<std::string>& a_texts, const std::string& b_id,
                             std::span<const EmbeddingVector> b,
                             const std::vector<std::string>& b_texts, double threshold);

void to_json(nlohmann::json& j, const SimilarityMatrix& m);
void from_json(const nlohmann::json& j, SimilarityMatrix& m);
void to_json(nlohmann::json& j, const MatchResult& r);

}  // namespace factalign
