#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace factalign::branching {

enum class NodeKind { Leaf, And, Or, Cond };

/// Conditional/conjunction structure of one sentence.
///
/// Leaf carries text; And/Or carry >= 2 children in source order; Cond
/// carries {antecedent, consequent} in children[0] and children[1].
/// antecedent_first records whether the condition preceded its consequent
/// in the source ("if X, Y" vs "Y if X") so in-order traversal of the
/// leaves follows the source text.
struct LogicTree {
  NodeKind kind = NodeKind::Leaf;
  std::string text;
  std::vector<LogicTree> children;
  bool antecedent_first = true;

  static LogicTree leaf(std::string text);
  static LogicTree conjunction(std::vector<LogicTree> children);
  static LogicTree disjunction(std::vector<LogicTree> children);
  static LogicTree conditional(LogicTree antecedent, LogicTree consequent, bool antecedent_first = true);

  const LogicTree& antecedent() const { return children.at(0); }
  const LogicTree& consequent() const { return children.at(1); }

  friend bool operator==(const LogicTree&, const LogicTree&) = default;
};

/// Cue words, case-folded. The first conditional cue is used when a
/// condition is rendered back into text.
struct CueLexicon {
  std::vector<std::string> conditional;
  std::vector<std::string> conjunction;
  std::vector<std::string> disjunction;
  std::string condition_marker;  // appended to a standalone condition fact
};

/// "de*" selects the German lexicon; everything else English.
CueLexicon lexicon_for(const std::string& language);

/// Cue-driven recursive-descent parse with precedence Cond > Or > And.
/// Total: input without usable cue structure becomes a single Leaf.
LogicTree parse_logic(const std::string& sentence, const std::string& language = "en");
LogicTree parse_logic(const std::string& sentence, const CueLexicon& lexicon);

/// Leaves in source order.
std::vector<std::string> leaf_texts(const LogicTree& tree);

bool has_conditional(const LogicTree& tree);

/// Re-assembles a subtree into one sentence fragment using the lexicon's cues.
std::string render(const LogicTree& tree, const CueLexicon& lexicon);

enum class Strategy { ReplicateCondition, OmitCondition };

struct Decomposition {
  std::vector<std::string> facts;
  Strategy strategy = Strategy::ReplicateCondition;

  friend bool operator==(const Decomposition&, const Decomposition&) = default;
};

/// One variant for trees without a conditional (both strategies coincide),
/// otherwise [replicate_condition, omit_condition]. And splits, Or never does.
std::vector<Decomposition> enumerate_decompositions(const LogicTree& tree,
                                                    const std::string& language = "en");

/// (no-split count, largest count over all decomposition variants).
std::pair<std::size_t, std::size_t> fact_count_bounds(const LogicTree& tree);

void to_json(nlohmann::json& j, const LogicTree& t);
void from_json(const nlohmann::json& j, LogicTree& t);
void to_json(nlohmann::json& j, const Decomposition& d);

}  // namespace factalign::branching
