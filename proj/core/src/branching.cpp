#include "factalign/branching.hpp"

#include <algorithm>

#include "factalign/error.hpp"
#include "factalign/model.hpp"
#include "factalign/text.hpp"

namespace factalign::branching {

using nlohmann::json;

LogicTree LogicTree::leaf(std::string text) {
  LogicTree t;
  t.kind = NodeKind::Leaf;
  t.text = std::move(text);
  return t;
}

LogicTree LogicTree::conjunction(std::vector<LogicTree> children) {
  LogicTree t;
  t.kind = NodeKind::And;
  t.children = std::move(children);
  return t;
}

LogicTree LogicTree::disjunction(std::vector<LogicTree> children) {
  LogicTree t;
  t.kind = NodeKind::Or;
  t.children = std::move(children);
  return t;
}

LogicTree LogicTree::conditional(LogicTree antecedent, LogicTree consequent, bool antecedent_first) {
  LogicTree t;
  t.kind = NodeKind::Cond;
  t.children.push_back(std::move(antecedent));
  t.children.push_back(std::move(consequent));
  t.antecedent_first = antecedent_first;
  return t;
}

CueLexicon lexicon_for(const std::string& language) {
  if (language.rfind("de", 0) == 0) {
    return {{"wenn", "falls", "sofern"}, {"und"}, {"oder"}, "(Bedingung)"};
  }
  return {{"if", "when", "unless"}, {"and"}, {"or"}, "(condition)"};
}

namespace {

enum class TokenKind { Word, CondCue, AndCue, OrCue, Comma, Punct };

struct Token {
  TokenKind kind;
  Span span;
};

bool contains(const std::vector<std::string>& words, const std::string& w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

class Parser {
 public:
  Parser(const std::string& sentence, const CueLexicon& lexicon)
      : scalars_(utf8::decode(sentence)) {
    const auto words = tokenize_words(sentence);
    std::size_t w = 0;
    for (std::size_t i = 0; i < scalars_.size();) {
      if (w < words.size() && words[w].span.start == i) {
        const auto& word = words[w];
        TokenKind kind = TokenKind::Word;
        if (contains(lexicon.conditional, word.folded)) {
          kind = TokenKind::CondCue;
        } else if (contains(lexicon.conjunction, word.folded)) {
          kind = TokenKind::AndCue;
        } else if (contains(lexicon.disjunction, word.folded)) {
          kind = TokenKind::OrCue;
        }
        tokens_.push_back({kind, word.span});
        i = word.span.end;
        ++w;
      } else {
        if (!is_space(scalars_[i])) {
          tokens_.push_back({scalars_[i] == U',' ? TokenKind::Comma : TokenKind::Punct, Span{i, i + 1}});
        }
        ++i;
      }
    }
  }

  LogicTree parse() {
    const bool has_cue = std::any_of(tokens_.begin(), tokens_.end(), [](const Token& t) {
      return t.kind == TokenKind::CondCue || t.kind == TokenKind::AndCue || t.kind == TokenKind::OrCue;
    });
    if (!has_cue) return LogicTree::leaf(trim(utf8::encode(scalars_)));
    std::size_t end = tokens_.size();
    while (end > 0 && tokens_[end - 1].kind == TokenKind::Punct) --end;
    if (stripped(0, end).first == stripped(0, end).second) {
      return LogicTree::leaf(trim(utf8::encode(scalars_)));
    }
    return clause(0, end);
  }

 private:
  using Range = std::pair<std::size_t, std::size_t>;

  // Range without leading/trailing commas.
  Range stripped(std::size_t b, std::size_t e) const {
    while (b < e && tokens_[b].kind == TokenKind::Comma) ++b;
    while (e > b && tokens_[e - 1].kind == TokenKind::Comma) --e;
    return {b, e};
  }

  bool empty(std::size_t b, std::size_t e) const {
    const auto [sb, se] = stripped(b, e);
    return sb == se;
  }

  LogicTree leaf(std::size_t b, std::size_t e) const {
    const auto [sb, se] = stripped(b, e);
    const std::size_t from = tokens_[sb].span.start;
    const std::size_t to = tokens_[se - 1].span.end;
    return LogicTree::leaf(utf8::encode(std::u32string_view(scalars_).substr(from, to - from)));
  }

  LogicTree clause(std::size_t b, std::size_t e) const {
    std::tie(b, e) = stripped(b, e);
    if (tokens_[b].kind == TokenKind::CondCue) {
      for (std::size_t k = b + 1; k < e; ++k) {
        if (tokens_[k].kind != TokenKind::Comma) continue;
        if (!empty(b + 1, k) && !empty(k + 1, e)) {
          return LogicTree::conditional(disjunction(b + 1, k), clause(k + 1, e), true);
        }
        break;
      }
    }
    for (std::size_t k = b + 1; k < e; ++k) {
      if (tokens_[k].kind != TokenKind::CondCue) continue;
      if (!empty(b, k) && !empty(k + 1, e)) {
        return LogicTree::conditional(disjunction(k + 1, e), disjunction(b, k), false);
      }
      break;
    }
    return disjunction(b, e);
  }

  // Splits [b, e) at cues of `kind`, dropping any cue that would leave an
  // empty part (that cue then stays literal text inside its neighbour).
  std::vector<Range> split(std::size_t b, std::size_t e, TokenKind kind) const {
    std::vector<std::size_t> cuts;
    for (std::size_t k = b; k < e; ++k) {
      if (tokens_[k].kind == kind) cuts.push_back(k);
    }
    while (true) {
      std::vector<Range> parts;
      std::size_t start = b;
      for (std::size_t c : cuts) {
        parts.emplace_back(start, c);
        start = c + 1;
      }
      parts.emplace_back(start, e);
      std::size_t bad = parts.size();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (empty(parts[i].first, parts[i].second)) {
          bad = i;
          break;
        }
      }
      if (bad == parts.size()) return parts;
      cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(bad < cuts.size() ? bad : bad - 1));
    }
  }

  LogicTree disjunction(std::size_t b, std::size_t e) const {
    const auto parts = split(b, e, TokenKind::OrCue);
    if (parts.size() == 1) return conjunction(b, e);
    std::vector<LogicTree> children;
    for (const auto& [pb, pe] : parts) children.push_back(conjunction(pb, pe));
    return LogicTree::disjunction(std::move(children));
  }

  LogicTree conjunction(std::size_t b, std::size_t e) const {
    const auto parts = split(b, e, TokenKind::AndCue);
    if (parts.size() == 1) return leaf(b, e);
    std::vector<LogicTree> children;
    for (const auto& [pb, pe] : parts) children.push_back(leaf(pb, pe));
    return LogicTree::conjunction(std::move(children));
  }

  std::u32string scalars_;
  std::vector<Token> tokens_;
};

void collect_leaves(const LogicTree& t, std::vector<std::string>& out) {
  switch (t.kind) {
    case NodeKind::Leaf:
      out.push_back(t.text);
      return;
    case NodeKind::Cond:
      if (t.antecedent_first) {
        collect_leaves(t.antecedent(), out);
        collect_leaves(t.consequent(), out);
      } else {
        collect_leaves(t.consequent(), out);
        collect_leaves(t.antecedent(), out);
      }
      return;
    default:
      for (const auto& c : t.children) collect_leaves(c, out);
  }
}

std::string with_conditions(const std::vector<std::string>& conditions, const std::string& fact,
                            const CueLexicon& lexicon) {
  std::string out;
  for (const auto& c : conditions) out += lexicon.conditional.front() + " " + c + ", ";
  return out + fact;
}

void decompose(const LogicTree& t, Strategy strategy, const CueLexicon& lexicon,
               std::vector<std::string>& conditions, std::vector<std::string>& out) {
  switch (t.kind) {
    case NodeKind::Leaf:
      if (!t.text.empty()) out.push_back(with_conditions(conditions, t.text, lexicon));
      return;
    case NodeKind::Or:
      out.push_back(with_conditions(conditions, render(t, lexicon), lexicon));
      return;
    case NodeKind::And:
      for (const auto& c : t.children) decompose(c, strategy, lexicon, conditions, out);
      return;
    case NodeKind::Cond: {
      const auto condition = render(t.antecedent(), lexicon);
      if (strategy == Strategy::ReplicateCondition) {
        conditions.push_back(condition);
        decompose(t.consequent(), strategy, lexicon, conditions, out);
        conditions.pop_back();
      } else {
        out.push_back(with_conditions(conditions, condition + " " + lexicon.condition_marker, lexicon));
        decompose(t.consequent(), strategy, lexicon, conditions, out);
      }
      return;
    }
  }
}

}  // namespace

LogicTree parse_logic(const std::string& sentence, const CueLexicon& lexicon) {
  return Parser(sentence, lexicon).parse();
}

LogicTree parse_logic(const std::string& sentence, const std::string& language) {
  return parse_logic(sentence, lexicon_for(language));
}

std::vector<std::string> leaf_texts(const LogicTree& tree) {
  std::vector<std::string> out;
  collect_leaves(tree, out);
  return out;
}

bool has_conditional(const LogicTree& tree) {
  if (tree.kind == NodeKind::Cond) return true;
  return std::any_of(tree.children.begin(), tree.children.end(),
                     [](const LogicTree& c) { return has_conditional(c); });
}

std::string render(const LogicTree& tree, const CueLexicon& lexicon) {
  const auto join = [&](const std::string& cue) {
    std::string out;
    for (std::size_t i = 0; i < tree.children.size(); ++i) {
      if (i > 0) out += " " + cue + " ";
      out += render(tree.children[i], lexicon);
    }
    return out;
  };
  switch (tree.kind) {
    case NodeKind::Leaf: return tree.text;
    case NodeKind::And: return join(lexicon.conjunction.front());
    case NodeKind::Or: return join(lexicon.disjunction.front());
    case NodeKind::Cond: {
      const auto condition = render(tree.antecedent(), lexicon);
      const auto body = render(tree.consequent(), lexicon);
      const auto& cue = lexicon.conditional.front();
      return tree.antecedent_first ? cue + " " + condition + ", " + body
                                   : body + " " + cue + " " + condition;
    }
  }
  return tree.text;
}

std::vector<Decomposition> enumerate_decompositions(const LogicTree& tree, const std::string& language) {
  const auto lexicon = lexicon_for(language);
  std::vector<Strategy> strategies{Strategy::ReplicateCondition};
  if (has_conditional(tree)) strategies.push_back(Strategy::OmitCondition);
  std::vector<Decomposition> out;
  for (auto s : strategies) {
    Decomposition d;
    d.strategy = s;
    std::vector<std::string> conditions;
    decompose(tree, s, lexicon, conditions, d.facts);
    out.push_back(std::move(d));
  }
  return out;
}

std::pair<std::size_t, std::size_t> fact_count_bounds(const LogicTree& tree) {
  std::size_t max = 1;
  for (const auto& d : enumerate_decompositions(tree)) max = std::max(max, d.facts.size());
  return {1, max};
}

namespace {
std::string_view kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Leaf: return "leaf";
    case NodeKind::And: return "and";
    case NodeKind::Or: return "or";
    case NodeKind::Cond: return "cond";
  }
  return "leaf";
}
}  // namespace

void to_json(json& j, const LogicTree& t) {
  j = json{{"type", kind_name(t.kind)}};
  switch (t.kind) {
    case NodeKind::Leaf:
      j["text"] = t.text;
      break;
    case NodeKind::And:
    case NodeKind::Or:
      j["children"] = t.children;
      break;
    case NodeKind::Cond:
      j["antecedent"] = t.antecedent();
      j["consequent"] = t.consequent();
      j["antecedent_first"] = t.antecedent_first;
      break;
  }
}

void from_json(const json& j, LogicTree& t) {
  const auto type = j.at("type").get<std::string>();
  if (type == "leaf") {
    t = LogicTree::leaf(j.at("text").get<std::string>());
  } else if (type == "and" || type == "or") {
    auto children = j.at("children").get<std::vector<LogicTree>>();
    if (children.size() < 2) throw_invalid_json("and/or node needs at least two children");
    t = type == "and" ? LogicTree::conjunction(std::move(children))
                      : LogicTree::disjunction(std::move(children));
  } else if (type == "cond") {
    t = LogicTree::conditional(j.at("antecedent").get<LogicTree>(), j.at("consequent").get<LogicTree>(),
                               j.value("antecedent_first", true));
  } else {
    throw_invalid_json("unknown logic node type '" + type + "'");
  }
}

void to_json(json& j, const Decomposition& d) {
  j = json{{"facts", d.facts},
           {"strategy", d.strategy == Strategy::ReplicateCondition ? "replicate_condition"
                                                                   : "omit_condition"}};
}

}  // namespace factalign::branching
