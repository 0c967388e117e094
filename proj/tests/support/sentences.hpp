#pragma once

// Random sentences over a small vocabulary with cue words, commas and
// sentence punctuation mixed in, including degenerate placements (leading,
// trailing and doubled cues).

#include <string>
#include <vector>

#include "factalign/branching.hpp"
#include "factalign/text.hpp"
#include "fixtures.hpp"

namespace sentences {

inline std::string random_cue_sentence(fixtures::Rng& rng) {
  static const std::vector<std::string> words = {"you", "need", "a", "permit", "the", "office",
                                                 "pays", "Anna", "form", "fee", "resident", "B"};
  static const std::vector<std::string> cues = {"if", "If", "when", "unless", "and", "And", "or"};
  static const std::vector<std::string> marks = {",", ".", "!", ";", "?"};
  const std::size_t n = fixtures::uniform(rng, 1, 14);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto roll = fixtures::uniform(rng, 0, 9);
    std::string piece;
    bool glue = false;
    if (roll < 6) {
      piece = words[fixtures::uniform(rng, 0, words.size() - 1)];
    } else if (roll < 9) {
      piece = cues[fixtures::uniform(rng, 0, cues.size() - 1)];
    } else {
      piece = marks[fixtures::uniform(rng, 0, marks.size() - 1)];
      glue = true;
    }
    if (!out.empty() && !glue) out += ' ';
    out += piece;
  }
  if (fixtures::uniform(rng, 0, 1) == 0) out += '.';
  return out;
}

/// Leaf tokens, in order, form a subsequence of the input tokens and every
/// input token left over is a cue word. Returns an empty string on success,
/// otherwise a description of the first violation.
inline std::string round_trip_violation(const std::string& sentence, const factalign::branching::LogicTree& tree,
                                        const factalign::branching::CueLexicon& lexicon) {
  std::vector<std::string> input;
  for (const auto& t : factalign::tokenize_words(sentence)) input.push_back(t.folded);
  std::vector<std::string> leaves;
  for (const auto& leaf : factalign::branching::leaf_texts(tree)) {
    if (leaf.empty()) return "empty leaf";
    for (const auto& t : factalign::tokenize_words(leaf)) leaves.push_back(t.folded);
  }
  const auto is_cue = [&](const std::string& w) {
    for (const auto* list : {&lexicon.conditional, &lexicon.conjunction, &lexicon.disjunction}) {
      for (const auto& c : *list) {
        if (c == w) return true;
      }
    }
    return false;
  };
  std::size_t k = 0;
  for (const auto& w : input) {
    if (k < leaves.size() && leaves[k] == w) {
      ++k;
    } else if (!is_cue(w)) {
      return "non-cue token '" + w + "' missing from leaves";
    }
  }
  if (k != leaves.size()) return "leaf tokens are not a subsequence of the input";
  return {};
}

}  // namespace sentences
