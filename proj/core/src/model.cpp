#include "factalign/model.hpp"

#include <cstdio>
#include <ctime>

#include "factalign/error.hpp"

namespace factalign {

using nlohmann::json;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorKind::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorKind::InvalidCounts: return "InvalidCounts";
    case ErrorKind::EmptyGoldSet: return "EmptyGoldSet";
    case ErrorKind::TooFewAnnotations: return "TooFewAnnotations";
    case ErrorKind::DocumentMismatch: return "DocumentMismatch";
    case ErrorKind::IntegrityViolation: return "IntegrityViolation";
    case ErrorKind::StorageFailure: return "StorageFailure";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::UnknownRound: return "UnknownRound";
  }
  return "Unknown";
}

Timestamp Timestamp::now() {
  return Timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

Timestamp Timestamp::parse(const std::string& iso8601) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  int consumed = 0;
  if (std::sscanf(iso8601.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c%n", &y, &mo, &d, &h, &mi, &s, &tail,
                  &consumed) != 7 ||
      tail != 'Z' || static_cast<std::size_t>(consumed) != iso8601.size() || mo < 1 || mo > 12 ||
      d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    throw Error(ErrorKind::InvalidArgument, "malformed timestamp: " + iso8601);
  }
  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  return Timestamp(std::chrono::sys_seconds(std::chrono::seconds(timegm(&tm))));
}

std::string Timestamp::to_string() const {
  const std::time_t t = time_.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> Annotation::fact_texts() const {
  std::vector<std::string> out;
  out.reserve(facts.size());
  for (const auto& f : facts) out.push_back(f.text);
  return out;
}

std::vector<Violation> validate_annotation(const Annotation& annotation, const Document& document) {
  std::vector<Violation> out;
  if (annotation.document_id != document.id) {
    out.push_back({ViolationKind::DocumentMismatch, std::nullopt, std::nullopt,
                   "annotation references document '" + annotation.document_id + "', not '" +
                       document.id + "'"});
  }
  const std::size_t doc_len = utf8::length(document.text);
  for (std::size_t i = 0; i < annotation.facts.size(); ++i) {
    const auto& fact = annotation.facts[i];
    if (trim(fact.text).empty()) {
      out.push_back({ViolationKind::EmptyText, i, std::nullopt, "empty fact text"});
    }
    for (std::size_t k = 0; k < fact.anchors.size(); ++k) {
      const auto& a = fact.anchors[k];
      if (a.start == a.end) {
        out.push_back({ViolationKind::EmptySpan, i, k, "empty span"});
      } else if (a.start > a.end) {
        out.push_back({ViolationKind::InvertedSpan, i, k, "inverted span"});
      } else if (a.end > doc_len) {
        out.push_back({ViolationKind::OutOfRange, i, k, "out of range"});
      }
    }
  }
  return out;
}

bool is_valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.size() > 200) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string_view to_string(AnnotatorKind kind) {
  return kind == AnnotatorKind::Human ? "human" : "model";
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyText: return "empty_text";
    case ViolationKind::EmptySpan: return "empty_span";
    case ViolationKind::InvertedSpan: return "inverted_span";
    case ViolationKind::OutOfRange: return "out_of_range";
    case ViolationKind::DocumentMismatch: return "document_mismatch";
  }
  return "unknown";
}

void throw_invalid_json(const std::string& what) {
  throw Error(ErrorKind::InvalidArgument, "invalid JSON record: " + what);
}

void to_json(json& j, const Timestamp& t) { j = t.to_string(); }
void from_json(const json& j, Timestamp& t) { t = Timestamp::parse(j.get<std::string>()); }

void to_json(json& j, const Span& s) { j = json{{"start", s.start}, {"end", s.end}}; }
void from_json(const json& j, Span& s) {
  j.at("start").get_to(s.start);
  j.at("end").get_to(s.end);
}

void to_json(json& j, const Document& d) {
  j = json{{"id", d.id}, {"text", d.text}, {"language", d.language}, {"source", d.source}};
}
void from_json(const json& j, Document& d) {
  j.at("id").get_to(d.id);
  j.at("text").get_to(d.text);
  d.language = j.value("language", std::string("en"));
  d.source = j.value("source", std::string());
}

void to_json(json& j, const Fact& f) { j = json{{"text", f.text}, {"anchors", f.anchors}}; }
void from_json(const json& j, Fact& f) {
  j.at("text").get_to(f.text);
  f.anchors = j.value("anchors", std::vector<Span>{});
}

void to_json(json& j, const AnnotatorKind& k) { j = std::string(to_string(k)); }
void from_json(const json& j, AnnotatorKind& k) {
  const auto s = j.get<std::string>();
  if (s == "human") {
    k = AnnotatorKind::Human;
  } else if (s == "model") {
    k = AnnotatorKind::Model;
  } else {
    throw Error(ErrorKind::InvalidArgument, "annotator kind must be 'human' or 'model', got '" + s + "'");
  }
}

void to_json(json& j, const Annotator& a) {
  j = json{{"id", a.id}, {"kind", a.kind}, {"label", a.label}};
}
void from_json(const json& j, Annotator& a) {
  j.at("id").get_to(a.id);
  j.at("kind").get_to(a.kind);
  a.label = j.value("label", a.id);
}

void to_json(json& j, const GuidelineVersion& g) {
  j = json{{"id", g.id}, {"version", g.version}, {"body", g.body}, {"created_at", g.created_at}};
}
void from_json(const json& j, GuidelineVersion& g) {
  j.at("id").get_to(g.id);
  j.at("version").get_to(g.version);
  g.body = j.value("body", std::string());
  j.at("created_at").get_to(g.created_at);
}

void to_json(json& j, const Annotation& a) {
  j = json{{"id", a.id},
           {"document_id", a.document_id},
           {"annotator_id", a.annotator_id},
           {"guideline_version_id", a.guideline_version_id},
           {"facts", a.facts},
           {"created_at", a.created_at}};
}
void from_json(const json& j, Annotation& a) {
  j.at("id").get_to(a.id);
  j.at("document_id").get_to(a.document_id);
  j.at("annotator_id").get_to(a.annotator_id);
  j.at("guideline_version_id").get_to(a.guideline_version_id);
  j.at("facts").get_to(a.facts);
  j.at("created_at").get_to(a.created_at);
}

void to_json(json& j, const AnnotationRound& r) {
  j = json{{"id", r.id},
           {"guideline_version_id", r.guideline_version_id},
           {"annotation_ids", r.annotation_ids},
           {"notes", r.notes}};
}
void from_json(const json& j, AnnotationRound& r) {
  j.at("id").get_to(r.id);
  j.at("guideline_version_id").get_to(r.guideline_version_id);
  j.at("annotation_ids").get_to(r.annotation_ids);
  r.notes = j.value("notes", std::string());
}

void to_json(json& j, const GoldMatching& g) {
  json pairs = json::array();
  for (const auto& [a, b] : g.pairs) pairs.push_back({a, b});
  j = json{{"id", g.id},
           {"annotation_a_id", g.annotation_a_id},
           {"annotation_b_id", g.annotation_b_id},
           {"pairs", pairs}};
}
void from_json(const json& j, GoldMatching& g) {
  j.at("id").get_to(g.id);
  j.at("annotation_a_id").get_to(g.annotation_a_id);
  j.at("annotation_b_id").get_to(g.annotation_b_id);
  g.pairs.clear();
  for (const auto& p : j.at("pairs")) {
    if (!p.is_array() || p.size() != 2) throw_invalid_json("gold pair must be [index_a, index_b]");
    g.pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
  }
}

void to_json(json& j, const Violation& v) {
  j = json{{"kind", to_string(v.kind)}, {"message", v.message}};
  j["fact_index"] = v.fact_index ? json(*v.fact_index) : json(nullptr);
  j["anchor_index"] = v.anchor_index ? json(*v.anchor_index) : json(nullptr);
}

}  // namespace factalign
