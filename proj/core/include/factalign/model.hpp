#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/text.hpp"

namespace factalign {

/// UTC instant with second resolution, encoded as "YYYY-MM-DDThh:mm:ssZ".
class Timestamp {
 public:
  Timestamp() = default;
  explicit Timestamp(std::chrono::sys_seconds t) : time_(t) {}

  static Timestamp now();
  /// Throws Error(InvalidArgument) on malformed input.
  static Timestamp parse(const std::string& iso8601);

  std::chrono::sys_seconds time() const { return time_; }
  std::string to_string() const;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

 private:
  std::chrono::sys_seconds time_{};
};

struct Document {
  std::string id;
  std::string text;
  std::string language = "en";
  std::string source;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Fact {
  std::string text;
  std::vector<Span> anchors;

  friend bool operator==(const Fact&, const Fact&) = default;
};

enum class AnnotatorKind { Human, Model };

struct Annotator {
  std::string id;
  AnnotatorKind kind = AnnotatorKind::Human;
  std::string label;

  friend bool operator==(const Annotator&, const Annotator&) = default;
};

struct GuidelineVersion {
  std::string id;
  long long version = 1;
  std::string body;
  Timestamp created_at;

  friend bool operator==(const GuidelineVersion&, const GuidelineVersion&) = default;
};

struct Annotation {
  std::string id;
  std::string document_id;
  std::string annotator_id;
  std::string guideline_version_id;
  std::vector<Fact> facts;
  Timestamp created_at;

  std::vector<std::string> fact_texts() const;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct AnnotationRound {
  std::string id;
  std::string guideline_version_id;
  std::vector<std::string> annotation_ids;
  std::string notes;

  friend bool operator==(const AnnotationRound&, const AnnotationRound&) = default;
};

/// Index pair (row in annotation A, column in annotation B).
using IndexPair = std::pair<std::size_t, std::size_t>;

/// Human-judged correspondences between two annotations of one document.
struct GoldMatching {
  std::string id;
  std::string annotation_a_id;
  std::string annotation_b_id;
  std::vector<IndexPair> pairs;

  friend bool operator==(const GoldMatching&, const GoldMatching&) = default;
};

enum class ViolationKind { EmptyText, EmptySpan, InvertedSpan, OutOfRange, DocumentMismatch };

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> fact_index;
  std::optional<std::size_t> anchor_index;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks every Fact invariant against the document. Violations are
/// reported in fact order, then anchor order; an empty result means valid.
std::vector<Violation> validate_annotation(const Annotation& annotation, const Document& document);

/// Ids double as file names in a workspace: [A-Za-z0-9._-]+, not "." or "..".
bool is_valid_id(const std::string& id);

std::string_view to_string(AnnotatorKind kind);
std::string_view to_string(ViolationKind kind);

// Canonical JSON encodings. Field names match the struct members.
void to_json(nlohmann::json& j, const Timestamp& t);
void from_json(const nlohmann::json& j, Timestamp& t);
void to_json(nlohmann::json& j, const Span& s);
void from_json(const nlohmann::json& j, Span& s);
void to_json(nlohmann::json& j, const Document& d);
void from_json(const nlohmann::json& j, Document& d);
void to_json(nlohmann::json& j, const Fact& f);
void from_json(const nlohmann::json& j, Fact& f);
void to_json(nlohmann::json& j, const AnnotatorKind& k);
void from_json(const nlohmann::json& j, AnnotatorKind& k);
void to_json(nlohmann::json& j, const Annotator& a);
void from_json(const nlohmann::json& j, Annotator& a);
void to_json(nlohmann::json& j, const GuidelineVersion& g);
void from_json(const nlohmann::json& j, GuidelineVersion& g);
void to_json(nlohmann::json& j, const Annotation& a);
void from_json(const nlohmann::json& j, Annotation& a);
void to_json(nlohmann::json& j, const AnnotationRound& r);
void from_json(const nlohmann::json& j, AnnotationRound& r);
void to_json(nlohmann::json& j, const GoldMatching& g);
void from_json(const nlohmann::json& j, GoldMatching& g);
void to_json(nlohmann::json& j, const Violation& v);

[[noreturn]] void throw_invalid_json(const std::string& what);

/// Decodes a record, converting nlohmann exceptions into Error(InvalidArgument).
template <typename T>
T decode(const nlohmann::json& j) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_json(e.what());
  }
}

}  // namespace factalign
