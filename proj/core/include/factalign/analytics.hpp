#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/embedding.hpp"
#include "factalign/matching.hpp"
#include "factalign/model.hpp"

namespace factalign {

// ---- Pairwise agreement (heatmap) ----

struct IaaMatrix {
  std::string scope;  // document id, or an aggregate marker
  std::vector<std::string> annotator_ids;
  std::vector<std::vector<double>> values;
};

/// Pairwise IAA for annotations of one document, in the given order.
/// Computed once per unordered pair and mirrored; diagonal forced to 1.0.
/// Throws TooFewAnnotations, DocumentMismatch.
IaaMatrix iaa_matrix(std::span<const Annotation> annotations, const Embedder& embedder,
                     double threshold = kDefaultThreshold);

// ---- Granularity (histogram) ----

struct FactCountEntry {
  std::string annotator_id;
  std::string document_id;
  std::string annotation_id;
  std::size_t count = 0;
};

struct CountAggregate {
  std::string annotator_id;
  double mean = 0.0;
  double median = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
  std::size_t documents = 0;
};

struct FactCountReport {
  std::vector<FactCountEntry> counts;        // sorted by annotator, document, annotation
  std::vector<CountAggregate> aggregates;    // sorted by annotator
};

FactCountReport fact_count_report(std::span<const Annotation> annotations);

// ---- Convergence over guideline versions ----

struct RoundInput {
  AnnotationRound round;
  long long guideline_version = 0;
  std::vector<Annotation> annotations;
};

struct ConvergencePoint {
  std::string round_id;
  std::string guideline_version_id;
  long long guideline_version = 0;
  double mean_iaa = 0.0;
  double median_iaa = 0.0;
  std::size_t pair_count = 0;
};

/// One point per round ordered by guideline version (then round id). Each
/// point averages the IAA of every annotator pair on every document that
/// has at least two annotations in the round. Throws TooFewAnnotations for
/// a round without any such document.
std::vector<ConvergencePoint> convergence_series(std::span<const RoundInput> rounds,
                                                 const Embedder& embedder,
                                                 double threshold = kDefaultThreshold);

// ---- Coverage projection ----

struct FactCoverage {
  std::size_t fact_index = 0;
  bool anchored = false;
  std::optional<double> support;  // share of content tokens found in the anchored text
  bool overspecified = false;
};

struct CoverageReport {
  std::string document_id;
  std::string annotation_id;
  std::size_t length = 0;
  std::vector<Span> covered;
  std::vector<Span> gaps;
  std::vector<std::size_t> unanchored;
  std::vector<IndexPair> skipped_anchors;  // (fact, anchor) outside the document or empty
  std::vector<FactCoverage> facts;
};

inline constexpr double kDefaultOverspecificationRatio = 0.5;

/// Interval union of all valid anchors against [0, length). A fact is
/// overspecified when fewer than `min_support` of its content tokens
/// (non-stopword, >= 3 scalars, case-folded) occur in its anchored text.
/// Throws DocumentMismatch.
CoverageReport coverage_report(const Document& document, const Annotation& annotation,
                               double min_support = kDefaultOverspecificationRatio);

/// Sorted, disjoint, maximal union of half-open spans (empty spans dropped).
std::vector<Span> merge_spans(std::vector<Span> spans);

// ---- Redundancy, clustering, consensus ----

struct RedundantPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double similarity = 0.0;
};

/// Within-list pairs i < j with similarity >= threshold, by descending
/// similarity then (i, j).
std::vector<RedundantPair> redundancy_pairs(const Annotation& annotation, const Embedder& embedder,
                                            double threshold);

struct ClusterMember {
  std::string annotation_id;
  std::string annotator_id;
  std::size_t fact_index = 0;
  std::string text;

  friend bool operator==(const ClusterMember&, const ClusterMember&) = default;
};

struct FactCluster {
  std::vector<ClusterMember> members;  // sorted by (annotation id, fact index)
  std::size_t medoid = 0;              // index into members

  const ClusterMember& medoid_member() const { return members.at(medoid); }
};

/// Connected components of the graph linking facts of different
/// annotations whose similarity is >= threshold. Annotations are processed
/// in id order, so the result does not depend on input order; clusters are
/// ordered by their first member. Throws InvalidArgument on duplicate ids.
std::vector<FactCluster> cluster_facts(std::span<const Annotation> annotations,
                                       const Embedder& embedder, double threshold);

struct ConsensusFact {
  std::string text;
  std::string annotation_id;
  std::size_t fact_index = 0;
  std::vector<std::string> supporting_annotators;
};

/// Medoid of every cluster spanning >= ceil(quorum * annotator_total)
/// distinct annotators. Throws InvalidArgument for annotator_total == 0 or
/// quorum outside (0, 1].
std::vector<ConsensusFact> majority_vote(std::span<const FactCluster> clusters,
                                         std::size_t annotator_total, double quorum);

void to_json(nlohmann::json& j, const IaaMatrix& m);
void to_json(nlohmann::json& j, const FactCountReport& r);
void to_json(nlohmann::json& j, const ConvergencePoint& p);
void to_json(nlohmann::json& j, const CoverageReport& r);
void to_json(nlohmann::json& j, const RedundantPair& p);
void to_json(nlohmann::json& j, const FactCluster& c);
void to_json(nlohmann::json& j, const ConsensusFact& f);

}  // namespace factalign
