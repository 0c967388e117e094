#pragma once

#include <compare>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/model.hpp"
#include "factalign/text.hpp"

namespace factalign::kg {

struct Entity {
  std::string label;  // normalized surface form
  std::vector<Span> spans;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Triple {
  std::string source;
  std::string relation;
  std::string target;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

enum class GraphOrigin { SourceText, Fact, FactList };

struct KnowledgeGraph {
  std::map<std::string, std::vector<Span>> nodes;  // label -> mention spans
  std::set<Triple> edges;
  GraphOrigin origin = GraphOrigin::SourceText;

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

struct GraphDiff {
  std::set<std::string> missing_nodes;
  std::set<std::string> extra_nodes;
  std::set<Triple> missing_edges;
  std::set<Triple> extra_edges;
  std::set<Triple> uncertain;

  bool empty() const;
  friend bool operator==(const GraphDiff&, const GraphDiff&) = default;
};

struct ExtractorOptions {
  /// Labels found in more than this fraction of sentences are dropped when
  /// the language is German and the text has at least min_sentences.
  double max_sentence_fraction = 0.2;
  std::size_t min_sentences_for_filter = 10;
  std::size_t max_relation_tokens = 5;
};

/// Entity and relation extraction behind one interface, so an external
/// (e.g. model-backed) extractor can replace the rule-based default.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual std::vector<Entity> entities(const std::string& text, const std::string& language) const = 0;
  virtual std::vector<Triple> relations(const std::string& text,
                                        const std::vector<Entity>& entities) const = 0;
};

/// Capitalized-token and digit runs as entity candidates; relation label is
/// the token sequence between adjacent mentions of one sentence.
class RuleBasedExtractor final : public Extractor {
 public:
  explicit RuleBasedExtractor(ExtractorOptions options = {}) : options_(options) {}

  std::vector<Entity> entities(const std::string& text, const std::string& language) const override;
  std::vector<Triple> relations(const std::string& text,
                                const std::vector<Entity>& entities) const override;

 private:
  ExtractorOptions options_;
};

inline constexpr const char* kFallbackRelation = "related_to";

std::vector<Entity> extract_entities(const std::string& text, const std::string& language);
std::vector<Triple> extract_relations(const std::string& text, const std::vector<Entity>& entities);

/// Nodes are all triple endpoints plus any given entities (which also
/// contribute mention spans); duplicate triples collapse.
KnowledgeGraph build_graph(const std::vector<Triple>& triples, GraphOrigin origin,
                           const std::vector<Entity>& entities = {});

KnowledgeGraph source_graph(const Document& document, const Extractor& extractor = RuleBasedExtractor{});

/// One graph per fact, built from that fact's text alone.
std::vector<KnowledgeGraph> fact_small_multiples(const Annotation& annotation,
                                                 const std::string& language = "en",
                                                 const Extractor& extractor = RuleBasedExtractor{});

/// Union of the per-fact graphs of an annotation.
KnowledgeGraph fact_list_graph(const Annotation& annotation, const std::string& language = "en",
                               const Extractor& extractor = RuleBasedExtractor{});

/// Label-set comparison on normalized labels. A reference edge whose endpoints are connected in
/// the candidate under a different relation is uncertain rather than
/// missing; such candidate edges are not reported as extra.
GraphDiff graph_diff(const KnowledgeGraph& reference, const KnowledgeGraph& candidate);

struct EntityHit {
  std::string label;
  Span span;  // scalar offsets within the fact text

  friend bool operator==(const EntityHit&, const EntityHit&) = default;
};

/// For each fact, occurrences of source-graph node labels in the fact text.
std::vector<std::vector<EntityHit>> highlight_entities(const Annotation& annotation,
                                                       const KnowledgeGraph& source_graph);

void to_json(nlohmann::json& j, const Entity& e);
void to_json(nlohmann::json& j, const Triple& t);
void to_json(nlohmann::json& j, const KnowledgeGraph& g);
void from_json(const nlohmann::json& j, KnowledgeGraph& g);
void to_json(nlohmann::json& j, const GraphDiff& d);
void to_json(nlohmann::json& j, const EntityHit& h);

}  // namespace factalign::kg
