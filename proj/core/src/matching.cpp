#include "factalign/matching.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "factalign/error.hpp"

namespace factalign {

using nlohmann::json;

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorKind::InvalidArgument, "matrix value count does not match its shape");
  }
}

SimilarityMatrix::SimilarityMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  for (const auto& row : rows) {
    if (row.size() != cols_) throw Error(ErrorKind::InvalidArgument, "ragged matrix rows");
    values_.insert(values_.end(), row.begin(), row.end());
  }
}

SimilarityMatrix SimilarityMatrix::transposed() const {
  std::vector<double> t(values_.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = at(r, c);
  }
  return SimilarityMatrix(cols_, rows_, std::move(t));
}

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> a,
                                   std::span<const EmbeddingVector> b) {
  std::vector<double> values;
  values.reserve(a.size() * b.size());
  for (const auto& u : a) {
    for (const auto& v : b) values.push_back(cosine_similarity(u, v));
  }
  return SimilarityMatrix(a.size(), b.size(), std::move(values));
}

namespace {

// Reduced costs within this bound count as tight when enumerating optimal
// assignments; costs lie in [0, 2], so rounding noise stays far below it.
constexpr double kTightEps = 1e-10;

struct SquareSolution {
  std::vector<std::size_t> col_of_row;
  std::vector<double> row_potential;
  std::vector<double> col_potential;
};

// Shortest-augmenting-path Hungarian method on an n x n cost matrix.
// Potentials satisfy cost(i, j) - u[i] - v[j] >= 0, with equality on the
// returned matching.
SquareSolution solve_square(const std::vector<double>& cost, std::size_t n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  SquareSolution sol;
  sol.col_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) sol.col_of_row[p[j] - 1] = j - 1;
  sol.row_potential.assign(u.begin() + 1, u.end());
  sol.col_potential.assign(v.begin() + 1, v.end());
  return sol;
}

// Rewrites an optimal perfect matching into the lexicographically smallest
// one over the first `real_rows` rows. Every perfect matching that uses only
// tight edges (zero reduced cost under optimal potentials) is optimal, so
// the search runs on the tight-edge subgraph: rows are fixed in order, each
// to the smallest column that still admits a completion, found by an
// alternating-path search through the unfixed part.
void lexicographic_minimum(const std::vector<double>& cost, std::size_t n, std::size_t real_rows,
                           SquareSolution& sol) {
  const auto tight = [&](std::size_t r, std::size_t c) {
    return cost[r * n + c] - sol.row_potential[r] - sol.col_potential[c] <= kTightEps;
  };
  auto& col_of_row = sol.col_of_row;
  std::vector<std::size_t> row_of_col(n);
  for (std::size_t r = 0; r < n; ++r) row_of_col[col_of_row[r]] = r;
  std::vector<char> row_fixed(n, 0), col_fixed(n, 0);

  for (std::size_t r = 0; r < real_rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (col_fixed[c] || !tight(r, c)) continue;
      if (col_of_row[r] == c) break;

      // Move r onto c; the displaced row must reach r's old column.
      const std::size_t displaced = row_of_col[c];
      const std::size_t freed_col = col_of_row[r];
      std::vector<std::size_t> parent_row(n, n);  // column -> row that reached it
      std::vector<char> seen_col(n, 0);
      std::deque<std::size_t> queue{displaced};
      bool found = false;
      while (!queue.empty() && !found) {
        const std::size_t x = queue.front();
        queue.pop_front();
        for (std::size_t y = 0; y < n; ++y) {
          if (y == c || col_fixed[y] || seen_col[y] || !tight(x, y)) continue;
          seen_col[y] = 1;
          parent_row[y] = x;
          if (y == freed_col) {
            found = true;
            break;
          }
          const std::size_t next = row_of_col[y];
          if (next != r && !row_fixed[next]) queue.push_back(next);
        }
      }
      if (!found) continue;

      col_of_row[r] = c;
      row_of_col[c] = r;
      // Walk back from freed_col: each row on the path takes the column it reached.
      std::size_t y = freed_col;
      while (true) {
        const std::size_t x = parent_row[y];
        const std::size_t prev = col_of_row[x];
        col_of_row[x] = y;
        row_of_col[y] = x;
        if (x == displaced) break;
        y = prev;
      }
      break;
    }
    row_fixed[r] = 1;
    col_fixed[col_of_row[r]] = 1;
  }
}

}  // namespace

Assignment optimal_assignment(const SimilarityMatrix& matrix) {
  for (double v : matrix.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteEntry, "similarity matrix has a non-finite entry");
  }
  const std::size_t rows = matrix.rows();
  const std::size_t cols = matrix.cols();
  const std::size_t n = std::max(rows, cols);
  if (rows == 0 || cols == 0) return {};

  std::vector<double> cost(n * n, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) cost[r * n + c] = 1.0 - matrix.at(r, c);
  }

  auto sol = solve_square(cost, n);
  lexicographic_minimum(cost, n, rows, sol);

  Assignment out;
  out.reserve(std::min(rows, cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (sol.col_of_row[r] < cols) out.emplace_back(r, sol.col_of_row[r]);
  }
  return out;
}

double assignment_total(const SimilarityMatrix& matrix, const Assignment& assignment) {
  double total = 0.0;
  for (const auto& [r, c] : assignment) total += matrix.at(r, c);
  return total;
}

Assignment filter_matches(const Assignment& assignment, const SimilarityMatrix& matrix,
                          double threshold) {
  Assignment out;
  for (const auto& pair : assignment) {
    if (matrix.at(pair.first, pair.second) >= threshold) out.push_back(pair);
  }
  return out;
}

double jaccard_iaa(std::size_t size_a, std::size_t size_b, std::size_t match_count) {
  if (match_count > std::min(size_a, size_b)) {
    throw Error(ErrorKind::InvalidCounts, "match count " + std::to_string(match_count) +
                                              " exceeds min(" + std::to_string(size_a) + ", " +
                                              std::to_string(size_b) + ")");
  }
  if (size_a == 0 && size_b == 0) return 1.0;
  return static_cast<double>(match_count) /
         static_cast<double>(size_a + size_b - match_count);
}

MatchResult match_embeddings(const std::string& a_id, std::span<const EmbeddingVector> a,
                             const std::vector<std::string>& a_texts, const std::string& b_id,
                             std::span<const EmbeddingVector> b,
                             const std::vector<std::string>& b_texts, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "threshold must lie in [0, 1]");
  }
  MatchResult result;
  result.annotation_a_id = a_id;
  result.annotation_b_id = b_id;
  result.threshold = threshold;
  result.matrix = similarity_matrix(a, b);

  if (b_texts < a_texts) {
    for (const auto& [r, c] : optimal_assignment(result.matrix.transposed())) {
      result.assignment.emplace_back(c, r);
    }
    std::sort(result.assignment.begin(), result.assignment.end());
  } else {
    result.assignment = optimal_assignment(result.matrix);
  }
  result.matches = filter_matches(result.assignment, result.matrix, threshold);
  result.iaa = jaccard_iaa(a.size(), b.size(), result.matches.size());
  return result;
}

MatchResult match_annotations(const Annotation& a, const Annotation& b, const Embedder& embedder,
                              double threshold) {
  const auto a_texts = a.fact_texts();
  const auto b_texts = b.fact_texts();
  const auto ea = embedder.embed(a_texts);
  const auto eb = embedder.embed(b_texts);
  return match_embeddings(a.id, ea, a_texts, b.id, eb, b_texts, threshold);
}

void to_json(json& j, const SimilarityMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  j = json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(rows)}};
}

void from_json(const json& j, SimilarityMatrix& m) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  std::vector<double> values;
  for (const auto& row : j.at("values")) {
    if (row.size() != cols) throw_invalid_json("matrix row length does not match cols");
    for (const auto& v : row) values.push_back(v.get<double>());
  }
  m = SimilarityMatrix(rows, cols, std::move(values));
}

namespace {
json pairs_json(const Assignment& pairs) {
  json out = json::array();
  for (const auto& [r, c] : pairs) out.push_back({r, c});
  return out;
}
}  // namespace

void to_json(json& j, const MatchResult& r) {
  j = json{{"annotation_a_id", r.annotation_a_id},
           {"annotation_b_id", r.annotation_b_id},
           {"matrix", r.matrix},
           {"assignment", pairs_json(r.assignment)},
           {"matches", pairs_json(r.matches)},
           {"threshold", r.threshold},
           {"iaa", r.iaa}};
}

}  // namespace factalign
