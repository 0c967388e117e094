#include "factalign/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "factalign/error.hpp"
#include "factalign/text.hpp"

namespace factalign {

using nlohmann::json;

namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

struct Embedded {
  const Annotation* annotation;
  std::vector<std::string> texts;
  std::vector<EmbeddingVector> vectors;
};

Embedded embed_annotation(const Annotation& a, const Embedder& embedder) {
  Embedded e{&a, a.fact_texts(), {}};
  e.vectors = embedder.embed(e.texts);
  return e;
}

double pair_iaa(const Embedded& x, const Embedded& y, double threshold) {
  return match_embeddings(x.annotation->id, x.vectors, x.texts, y.annotation->id, y.vectors, y.texts,
                          threshold)
      .iaa;
}

}  // namespace

IaaMatrix iaa_matrix(std::span<const Annotation> annotations, const Embedder& embedder,
                     double threshold) {
  if (annotations.size() < 2) {
    throw Error(ErrorKind::TooFewAnnotations, "an IAA matrix needs at least two annotations");
  }
  for (const auto& a : annotations) {
    if (a.document_id != annotations.front().document_id) {
      throw Error(ErrorKind::DocumentMismatch, "IAA matrix annotations must share one document");
    }
  }
  std::vector<Embedded> embedded;
  embedded.reserve(annotations.size());
  for (const auto& a : annotations) embedded.push_back(embed_annotation(a, embedder));

  const std::size_t n = annotations.size();
  IaaMatrix m;
  m.scope = annotations.front().document_id;
  m.values.assign(n, std::vector<double>(n, 1.0));
  for (const auto& a : annotations) m.annotator_ids.push_back(a.annotator_id);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = pair_iaa(embedded[i], embedded[j], threshold);
      m.values[i][j] = v;
      m.values[j][i] = v;
    }
  }
  return m;
}

FactCountReport fact_count_report(std::span<const Annotation> annotations) {
  FactCountReport report;
  for (const auto& a : annotations) {
    report.counts.push_back({a.annotator_id, a.document_id, a.id, a.facts.size()});
  }
  std::sort(report.counts.begin(), report.counts.end(), [](const auto& x, const auto& y) {
    return std::tie(x.annotator_id, x.document_id, x.annotation_id) <
           std::tie(y.annotator_id, y.document_id, y.annotation_id);
  });

  std::map<std::string, std::vector<double>> per_annotator;
  for (const auto& e : report.counts) per_annotator[e.annotator_id].push_back(static_cast<double>(e.count));
  for (const auto& [annotator, counts] : per_annotator) {
    CountAggregate agg;
    agg.annotator_id = annotator;
    agg.mean = mean_of(counts);
    agg.median = median_of(counts);
    agg.min = static_cast<std::size_t>(*std::min_element(counts.begin(), counts.end()));
    agg.max = static_cast<std::size_t>(*std::max_element(counts.begin(), counts.end()));
    agg.documents = counts.size();
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

std::vector<ConvergencePoint> convergence_series(std::span<const RoundInput> rounds,
                                                 const Embedder& embedder, double threshold) {
  std::vector<ConvergencePoint> points;
  for (const auto& input : rounds) {
    std::map<std::string, std::vector<const Annotation*>> by_document;
    for (const auto& a : input.annotations) by_document[a.document_id].push_back(&a);

    std::vector<double> iaas;
    for (auto& [doc, group] : by_document) {
      if (group.size() < 2) continue;
      std::sort(group.begin(), group.end(), [](const Annotation* x, const Annotation* y) {
        return std::tie(x->annotator_id, x->id) < std::tie(y->annotator_id, y->id);
      });
      std::vector<Embedded> embedded;
      for (const auto* a : group) embedded.push_back(embed_annotation(*a, embedder));
      for (std::size_t i = 0; i < embedded.size(); ++i) {
        for (std::size_t j = i + 1; j < embedded.size(); ++j) {
          iaas.push_back(pair_iaa(embedded[i], embedded[j], threshold));
        }
      }
    }
    if (iaas.empty()) {
      throw Error(ErrorKind::TooFewAnnotations,
                  "round '" + input.round.id + "' has no document with two or more annotations");
    }
    points.push_back({input.round.id, input.round.guideline_version_id, input.guideline_version,
                      mean_of(iaas), median_of(iaas), iaas.size()});
  }
  std::stable_sort(points.begin(), points.end(), [](const auto& x, const auto& y) {
    return std::tie(x.guideline_version, x.round_id) < std::tie(y.guideline_version, y.round_id);
  });
  return points;
}

std::vector<Span> merge_spans(std::vector<Span> spans) {
  std::erase_if(spans, [](const Span& s) { return s.start >= s.end; });
  std::sort(spans.begin(), spans.end());
  std::vector<Span> out;
  for (const auto& s : spans) {
    if (!out.empty() && s.start <= out.back().end) {
      out.back().end = std::max(out.back().end, s.end);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

CoverageReport coverage_report(const Document& document, const Annotation& annotation,
                               double min_support) {
  if (annotation.document_id != document.id) {
    throw Error(ErrorKind::DocumentMismatch, "annotation '" + annotation.id +
                                                 "' does not belong to document '" + document.id + "'");
  }
  CoverageReport report;
  report.document_id = document.id;
  report.annotation_id = annotation.id;
  const auto scalars = utf8::decode(document.text);
  report.length = scalars.size();

  std::vector<Span> all;
  for (std::size_t i = 0; i < annotation.facts.size(); ++i) {
    const auto& fact = annotation.facts[i];
    FactCoverage fc;
    fc.fact_index = i;
    std::set<std::string> anchored_tokens;
    for (std::size_t k = 0; k < fact.anchors.size(); ++k) {
      const auto& a = fact.anchors[k];
      if (a.start >= a.end || a.end > report.length) {
        report.skipped_anchors.emplace_back(i, k);
        continue;
      }
      fc.anchored = true;
      all.push_back(a);
      const auto piece = utf8::encode(std::u32string_view(scalars).substr(a.start, a.end - a.start));
      for (const auto& t : tokenize_words(piece)) anchored_tokens.insert(t.folded);
    }
    if (!fc.anchored) {
      report.unanchored.push_back(i);
    } else {
      std::size_t content = 0;
      std::size_t found = 0;
      for (const auto& t : tokenize_words(fact.text)) {
        if (t.span.length() < 3 || is_stopword(t.folded)) continue;
        ++content;
        found += anchored_tokens.count(t.folded);
      }
      fc.support = content == 0 ? 1.0 : static_cast<double>(found) / static_cast<double>(content);
      fc.overspecified = *fc.support < min_support;
    }
    report.facts.push_back(fc);
  }

  report.covered = merge_spans(std::move(all));
  std::size_t cursor = 0;
  for (const auto& s : report.covered) {
    if (s.start > cursor) report.gaps.push_back({cursor, s.start});
    cursor = s.end;
  }
  if (cursor < report.length) report.gaps.push_back({cursor, report.length});
  return report;
}

std::vector<RedundantPair> redundancy_pairs(const Annotation& annotation, const Embedder& embedder,
                                            double threshold) {
  const auto vectors = embedder.embed(annotation.fact_texts());
  std::vector<RedundantPair> out;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double s = cosine_similarity(vectors[i], vectors[j]);
      if (s >= threshold) out.push_back({i, j, s});
    }
  }
  std::sort(out.begin(), out.end(), [](const RedundantPair& x, const RedundantPair& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  return out;
}

std::vector<FactCluster> cluster_facts(std::span<const Annotation> annotations,
                                       const Embedder& embedder, double threshold) {
  std::vector<const Annotation*> ordered;
  for (const auto& a : annotations) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](const Annotation* x, const Annotation* y) { return x->id < y->id; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->id == ordered[i - 1]->id) {
      throw Error(ErrorKind::InvalidArgument, "duplicate annotation id '" + ordered[i]->id + "'");
    }
  }

  std::vector<ClusterMember> nodes;
  std::vector<std::size_t> owner;  // node -> position in `ordered`
  std::vector<EmbeddingVector> vectors;
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    const auto& a = *ordered[k];
    auto v = embedder.embed(a.fact_texts());
    for (std::size_t i = 0; i < a.facts.size(); ++i) {
      nodes.push_back({a.id, a.annotator_id, i, a.facts[i].text});
      owner.push_back(k);
      vectors.push_back(std::move(v[i]));
    }
  }

  const std::size_t n = nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<double> sim(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = cosine_similarity(vectors[i], vectors[j]);
      sim[i * n + j] = sim[j * n + i] = s;
      if (owner[i] != owner[j] && s >= threshold) {
        const auto ri = find(i);
        const auto rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> components;  // keyed by smallest node
  for (std::size_t i = 0; i < n; ++i) components[find(i)].push_back(i);

  std::vector<FactCluster> clusters;
  for (const auto& [root, ids] : components) {
    FactCluster c;
    double best = -2.0;
    for (std::size_t a = 0; a < ids.size(); ++a) {
      c.members.push_back(nodes[ids[a]]);
      double total = 0.0;
      for (std::size_t b = 0; b < ids.size(); ++b) {
        if (a != b) total += sim[ids[a] * n + ids[b]];
      }
      const double mean = ids.size() > 1 ? total / static_cast<double>(ids.size() - 1) : 1.0;
      if (mean > best) {
        best = mean;
        c.medoid = a;
      }
    }
    clusters.push_back(std::move(c));
  }
  return clusters;
}

std::vector<ConsensusFact> majority_vote(std::span<const FactCluster> clusters,
                                         std::size_t annotator_total, double quorum) {
  if (annotator_total == 0) throw Error(ErrorKind::InvalidArgument, "annotator_total must be >= 1");
  if (!(quorum > 0.0 && quorum <= 1.0)) throw Error(ErrorKind::InvalidArgument, "quorum must lie in (0, 1]");
  // The epsilon keeps products like 0.6 * 5 from rounding up past an integer.
  const auto required = static_cast<std::size_t>(
      std::max(1.0, std::ceil(quorum * static_cast<double>(annotator_total) - 1e-9)));
  std::vector<ConsensusFact> out;
  for (const auto& c : clusters) {
    std::set<std::string> annotators;
    for (const auto& m : c.members) annotators.insert(m.annotator_id);
    if (annotators.size() < required) continue;
    const auto& med = c.medoid_member();
    out.push_back({med.text, med.annotation_id, med.fact_index, {annotators.begin(), annotators.end()}});
  }
  return out;
}

void to_json(json& j, const IaaMatrix& m) {
  j = json{{"scope", m.scope}, {"annotator_ids", m.annotator_ids}, {"values", m.values}};
}

void to_json(json& j, const FactCountReport& r) {
  json counts = json::array();
  for (const auto& e : r.counts) {
    counts.push_back({{"annotator_id", e.annotator_id},
                      {"document_id", e.document_id},
                      {"annotation_id", e.annotation_id},
                      {"count", e.count}});
  }
  json aggregates = json::array();
  for (const auto& a : r.aggregates) {
    aggregates.push_back({{"annotator_id", a.annotator_id},
                          {"mean", a.mean},
                          {"median", a.median},
                          {"min", a.min},
                          {"max", a.max},
                          {"documents", a.documents}});
  }
  j = json{{"counts", std::move(counts)}, {"aggregates", std::move(aggregates)}};
}

void to_json(json& j, const ConvergencePoint& p) {
  j = json{{"round_id", p.round_id},
           {"guideline_version_id", p.guideline_version_id},
           {"guideline_version", p.guideline_version},
           {"mean_iaa", p.mean_iaa},
           {"median_iaa", p.median_iaa},
           {"pair_count", p.pair_count}};
}

void to_json(json& j, const CoverageReport& r) {
  json facts = json::array();
  for (const auto& f : r.facts) {
    facts.push_back({{"fact_index", f.fact_index},
                     {"anchored", f.anchored},
                     {"support", f.support ? json(*f.support) : json(nullptr)},
                     {"overspecified", f.overspecified}});
  }
  json skipped = json::array();
  for (const auto& [f, a] : r.skipped_anchors) skipped.push_back({f, a});
  j = json{{"document_id", r.document_id},
           {"annotation_id", r.annotation_id},
           {"length", r.length},
           {"covered", r.covered},
           {"gaps", r.gaps},
           {"unanchored", r.unanchored},
           {"skipped_anchors", std::move(skipped)},
           {"facts", std::move(facts)}};
}

void to_json(json& j, const RedundantPair& p) {
  j = json{{"i", p.i}, {"j", p.j}, {"similarity", p.similarity}};
}

void to_json(json& j, const FactCluster& c) {
  json members = json::array();
  for (const auto& m : c.members) {
    members.push_back({{"annotation_id", m.annotation_id},
                       {"annotator_id", m.annotator_id},
                       {"fact_index", m.fact_index},
                       {"text", m.text}});
  }
  j = json{{"members", std::move(members)}, {"medoid", c.medoid}};
}

void to_json(json& j, const ConsensusFact& f) {
  j = json{{"text", f.text},
           {"annotation_id", f.annotation_id},
           {"fact_index", f.fact_index},
           {"supporting_annotators", f.supporting_annotators}};
}

}  // namespace factalign
