#include "factalign/kg.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <tuple>

#include "factalign/error.hpp"

namespace factalign::kg {

using nlohmann::json;

namespace {

bool is_sentence_break(char32_t c) {
  return c == U'.' || c == U'!' || c == U'?' || c == U';' || c == U'\n';
}

// Sentence index of every scalar position.
std::vector<std::size_t> sentence_ids(const std::u32string& s) {
  std::vector<std::size_t> ids(s.size() + 1, 0);
  std::size_t current = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ids[i] = current;
    // A run of breaks (". \n") ends one sentence, not several.
    if (is_sentence_break(s[i]) && (i + 1 == s.size() || !is_sentence_break(s[i + 1]))) ++current;
  }
  ids[s.size()] = current;
  return ids;
}

bool is_candidate(const WordToken& token) {
  const auto first = utf8::decode(token.text).front();
  if (is_digit(first)) return true;
  return is_upper(first) && !is_stopword(token.folded);
}

bool only_spaces(const std::u32string& s, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i) {
    if (s[i] != U' ' && s[i] != U'\t') return false;
  }
  return true;
}

}  // namespace

bool GraphDiff::empty() const {
  return missing_nodes.empty() && extra_nodes.empty() && missing_edges.empty() &&
         extra_edges.empty() && uncertain.empty();
}

std::vector<Entity> RuleBasedExtractor::entities(const std::string& text,
                                                 const std::string& language) const {
  const auto scalars = utf8::decode(text);
  const auto sentence_of = sentence_ids(scalars);
  const auto tokens = tokenize_words(text);

  std::vector<Entity> out;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::set<std::size_t>> sentences_with;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!is_candidate(tokens[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tokens.size() && is_candidate(tokens[j]) &&
           sentence_of[tokens[j].span.start] == sentence_of[tokens[i].span.start] &&
           only_spaces(scalars, tokens[j - 1].span.end, tokens[j].span.start)) {
      ++j;
    }
    const Span span{tokens[i].span.start, tokens[j - 1].span.end};
    const auto label = normalize_label(utf8::encode(
        std::u32string_view(scalars).substr(span.start, span.end - span.start)));
    auto [it, inserted] = index.try_emplace(label, out.size());
    if (inserted) out.push_back({label, {}});
    out[it->second].spans.push_back(span);
    sentences_with[label].insert(sentence_of[span.start]);
    i = j;
  }

  const std::size_t sentence_count = sentence_of.back() + (scalars.empty() || is_sentence_break(scalars.back()) ? 0 : 1);
  if (language.rfind("de", 0) == 0 && sentence_count >= options_.min_sentences_for_filter) {
    std::erase_if(out, [&](const Entity& e) {
      return static_cast<double>(sentences_with[e.label].size()) >
             options_.max_sentence_fraction * static_cast<double>(sentence_count);
    });
  }
  return out;
}

std::vector<Triple> RuleBasedExtractor::relations(const std::string& text,
                                                  const std::vector<Entity>& entities) const {
  struct Mention {
    Span span;
    const std::string* label;
  };
  std::vector<Mention> mentions;
  for (const auto& e : entities) {
    for (const auto& s : e.spans) mentions.push_back({s, &e.label});
  }
  std::sort(mentions.begin(), mentions.end(), [](const Mention& x, const Mention& y) {
    return std::tie(x.span.start, x.span.end) < std::tie(y.span.start, y.span.end);
  });

  const auto scalars = utf8::decode(text);
  const auto sentence_of = sentence_ids(scalars);
  const auto tokens = tokenize_words(text);
  const auto sentence_at = [&](std::size_t pos) {
    return sentence_of[std::min(pos, scalars.size())];
  };

  std::vector<Triple> out;
  for (std::size_t k = 0; k + 1 < mentions.size(); ++k) {
    const auto& cur = mentions[k];
    const auto& next = mentions[k + 1];
    if (next.span.start < cur.span.end) continue;
    if (sentence_at(cur.span.start) != sentence_at(next.span.start)) continue;
    std::string relation;
    std::size_t taken = 0;
    for (const auto& t : tokens) {
      if (t.span.start < cur.span.end || t.span.end > next.span.start) continue;
      if (taken == options_.max_relation_tokens) break;
      if (!relation.empty()) relation += ' ';
      relation += t.folded;
      ++taken;
    }
    out.push_back({*cur.label, relation.empty() ? kFallbackRelation : relation, *next.label});
  }
  return out;
}

std::vector<Entity> extract_entities(const std::string& text, const std::string& language) {
  return RuleBasedExtractor{}.entities(text, language);
}

std::vector<Triple> extract_relations(const std::string& text, const std::vector<Entity>& entities) {
  return RuleBasedExtractor{}.relations(text, entities);
}

KnowledgeGraph build_graph(const std::vector<Triple>& triples, GraphOrigin origin,
                           const std::vector<Entity>& entities) {
  KnowledgeGraph g;
  g.origin = origin;
  for (const auto& e : entities) {
    auto& spans = g.nodes[e.label];
    spans.insert(spans.end(), e.spans.begin(), e.spans.end());
  }
  for (const auto& t : triples) {
    g.nodes.try_emplace(t.source);
    g.nodes.try_emplace(t.target);
    g.edges.insert(t);
  }
  return g;
}

KnowledgeGraph source_graph(const Document& document, const Extractor& extractor) {
  const auto entities = extractor.entities(document.text, document.language);
  return build_graph(extractor.relations(document.text, entities), GraphOrigin::SourceText, entities);
}

std::vector<KnowledgeGraph> fact_small_multiples(const Annotation& annotation,
                                                 const std::string& language,
                                                 const Extractor& extractor) {
  std::vector<KnowledgeGraph> out;
  out.reserve(annotation.facts.size());
  for (const auto& fact : annotation.facts) {
    const auto entities = extractor.entities(fact.text, language);
    out.push_back(build_graph(extractor.relations(fact.text, entities), GraphOrigin::Fact, entities));
  }
  return out;
}

KnowledgeGraph fact_list_graph(const Annotation& annotation, const std::string& language,
                               const Extractor& extractor) {
  KnowledgeGraph merged;
  merged.origin = GraphOrigin::FactList;
  // Spans are fact-local and meaningless in the merged graph; keep labels only.
  for (const auto& g : fact_small_multiples(annotation, language, extractor)) {
    for (const auto& [label, spans] : g.nodes) merged.nodes.try_emplace(label);
    merged.edges.insert(g.edges.begin(), g.edges.end());
  }
  return merged;
}

namespace {

struct LabelSets {
  std::set<std::string> nodes;
  std::set<Triple> edges;
  std::set<std::pair<std::string, std::string>> endpoints;
};

LabelSets normalized(const KnowledgeGraph& g) {
  LabelSets out;
  for (const auto& [label, spans] : g.nodes) out.nodes.insert(normalize_label(label));
  for (const auto& t : g.edges) {
    Triple n{normalize_label(t.source), normalize_label(t.relation), normalize_label(t.target)};
    out.endpoints.emplace(n.source, n.target);
    out.edges.insert(std::move(n));
  }
  return out;
}

}  // namespace

GraphDiff graph_diff(const KnowledgeGraph& reference, const KnowledgeGraph& candidate) {
  const auto ref = normalized(reference);
  const auto cand = normalized(candidate);
  GraphDiff d;
  std::set_difference(ref.nodes.begin(), ref.nodes.end(), cand.nodes.begin(), cand.nodes.end(),
                      std::inserter(d.missing_nodes, d.missing_nodes.end()));
  std::set_difference(cand.nodes.begin(), cand.nodes.end(), ref.nodes.begin(), ref.nodes.end(),
                      std::inserter(d.extra_nodes, d.extra_nodes.end()));
  for (const auto& t : ref.edges) {
    if (cand.edges.contains(t)) continue;
    if (cand.endpoints.contains({t.source, t.target})) {
      d.uncertain.insert(t);
    } else {
      d.missing_edges.insert(t);
    }
  }
  for (const auto& t : cand.edges) {
    if (ref.edges.contains(t) || ref.endpoints.contains({t.source, t.target})) continue;
    d.extra_edges.insert(t);
  }
  return d;
}

std::vector<std::vector<EntityHit>> highlight_entities(const Annotation& annotation,
                                                       const KnowledgeGraph& source_graph) {
  std::vector<std::pair<std::string, std::vector<std::string>>> labels;
  for (const auto& [label, spans] : source_graph.nodes) {
    std::vector<std::string> parts;
    for (const auto& t : tokenize_words(label)) parts.push_back(t.folded);
    if (!parts.empty()) labels.emplace_back(label, std::move(parts));
  }

  std::vector<std::vector<EntityHit>> out;
  out.reserve(annotation.facts.size());
  for (const auto& fact : annotation.facts) {
    const auto tokens = tokenize_words(fact.text);
    std::vector<EntityHit> hits;
    for (const auto& [label, parts] : labels) {
      for (std::size_t i = 0; i + parts.size() <= tokens.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < parts.size() && match; ++k) {
          match = tokens[i + k].folded == parts[k];
        }
        if (match) hits.push_back({label, Span{tokens[i].span.start, tokens[i + parts.size() - 1].span.end}});
      }
    }
    std::sort(hits.begin(), hits.end(), [](const EntityHit& x, const EntityHit& y) {
      return std::tie(x.span, x.label) < std::tie(y.span, y.label);
    });
    out.push_back(std::move(hits));
  }
  return out;
}

namespace {
std::string_view origin_name(GraphOrigin o) {
  switch (o) {
    case GraphOrigin::SourceText: return "source_text";
    case GraphOrigin::Fact: return "fact";
    case GraphOrigin::FactList: return "fact_list";
  }
  return "source_text";
}
}  // namespace

void to_json(json& j, const Entity& e) { j = json{{"label", e.label}, {"spans", e.spans}}; }

void to_json(json& j, const Triple& t) { j = json::array({t.source, t.relation, t.target}); }

void to_json(json& j, const KnowledgeGraph& g) {
  json nodes = json::array();
  for (const auto& [label, spans] : g.nodes) nodes.push_back({{"label", label}, {"spans", spans}});
  json edges = json::array();
  for (const auto& t : g.edges) edges.push_back(t);
  j = json{{"origin", origin_name(g.origin)}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

void from_json(const json& j, KnowledgeGraph& g) {
  g = KnowledgeGraph{};
  const auto origin = j.value("origin", std::string("source_text"));
  if (origin == "fact") {
    g.origin = GraphOrigin::Fact;
  } else if (origin == "fact_list") {
    g.origin = GraphOrigin::FactList;
  } else if (origin == "source_text") {
    g.origin = GraphOrigin::SourceText;
  } else {
    throw_invalid_json("unknown graph origin '" + origin + "'");
  }
  for (const auto& n : j.at("nodes")) {
    g.nodes[n.at("label").get<std::string>()] = n.value("spans", std::vector<Span>{});
  }
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3) throw_invalid_json("edge must be [source, relation, target]");
    Triple t{e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()};
    g.nodes.try_emplace(t.source);
    g.nodes.try_emplace(t.target);
    g.edges.insert(std::move(t));
  }
}

void to_json(json& j, const GraphDiff& d) {
  const auto triples = [](const std::set<Triple>& s) {
    json out = json::array();
    for (const auto& t : s) out.push_back(t);
    return out;
  };
  j = json{{"missing_nodes", d.missing_nodes},
           {"extra_nodes", d.extra_nodes},
           {"missing_edges", triples(d.missing_edges)},
           {"extra_edges", triples(d.extra_edges)},
           {"uncertain", triples(d.uncertain)}};
}

void to_json(json& j, const EntityHit& h) { j = json{{"label", h.label}, {"span", h.span}}; }

}  // namespace factalign::kg
