#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/model.hpp"

namespace factalign {

enum class RecordKind { Document, Annotator, Guideline, Annotation, Round, Gold };

/// Directory name of a record kind inside a workspace ("documents", ...).
std::string_view directory_name(RecordKind kind);
std::optional<RecordKind> record_kind_from_directory(std::string_view name);

template <typename T>
struct RecordTraits;
template <>
struct RecordTraits<Document> {
  static constexpr RecordKind kind = RecordKind::Document;
};
template <>
struct RecordTraits<Annotator> {
  static constexpr RecordKind kind = RecordKind::Annotator;
};
template <>
struct RecordTraits<GuidelineVersion> {
  static constexpr RecordKind kind = RecordKind::Guideline;
};
template <>
struct RecordTraits<Annotation> {
  static constexpr RecordKind kind = RecordKind::Annotation;
};
template <>
struct RecordTraits<AnnotationRound> {
  static constexpr RecordKind kind = RecordKind::Round;
};
template <>
struct RecordTraits<GoldMatching> {
  static constexpr RecordKind kind = RecordKind::Gold;
};

/// File-backed record store: one JSON file per record under
/// `<root>/<kind>/<id>.json`, written by atomic replace, plus
/// `workspace.json` holding the schema version and `cache/embeddings.jsonl`.
///
/// Writes are serialized and validated for referential integrity; readers
/// see the in-memory snapshot of the last completed write.
class Workspace {
 public:
  static constexpr int kSchemaVersion = 1;

  /// Opens an existing workspace or initializes an empty directory.
  /// Throws StorageFailure on unreadable files or a schema mismatch.
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path embedding_cache_path() const { return root_ / "cache" / "embeddings.jsonl"; }

  // Each put validates the record's invariants (InvalidArgument) and its
  // references (IntegrityViolation), then replaces any record with that id.
  std::string put(const Document& record);
  std::string put(const Annotator& record);
  std::string put(const GuidelineVersion& record);
  std::string put(const Annotation& record);
  std::string put(const AnnotationRound& record);
  std::string put(const GoldMatching& record);

  /// Decodes and stores a record given as JSON.
  std::string put_json(RecordKind kind, const nlohmann::json& record);

  template <typename T>
  std::optional<T> get(const std::string& id) const {
    auto j = get_json(RecordTraits<T>::kind, id);
    if (!j) return std::nullopt;
    return decode<T>(*j);
  }

  /// Like get, but throws NotFound.
  template <typename T>
  T require(const std::string& id) const {
    auto r = get<T>(id);
    if (!r) throw_not_found(RecordTraits<T>::kind, id);
    return std::move(*r);
  }

  /// All records of a kind, sorted by id.
  template <typename T>
  std::vector<T> list() const {
    std::vector<T> out;
    for (const auto& j : list_json(RecordTraits<T>::kind)) out.push_back(decode<T>(j));
    return out;
  }

  std::optional<nlohmann::json> get_json(RecordKind kind, const std::string& id) const;
  std::vector<nlohmann::json> list_json(RecordKind kind) const;

  /// Deletes a record without reference checks; dangling references
  /// surface as IntegrityViolation when they are read.
  bool remove(RecordKind kind, const std::string& id);

  /// Annotations of a round sorted by annotator id. Throws UnknownRound,
  /// IntegrityViolation for ids that no longer resolve.
  std::vector<Annotation> list_round_annotations(const std::string& round_id) const;

  /// Annotations of a document, sorted by annotator id then id.
  std::vector<Annotation> document_annotations(const std::string& document_id) const;

 private:
  using Table = std::map<std::string, nlohmann::json>;

  [[noreturn]] static void throw_not_found(RecordKind kind, const std::string& id);

  void load();
  void write_record(RecordKind kind, const std::string& id, const nlohmann::json& record);
  const Table& table(RecordKind kind) const;
  bool contains(RecordKind kind, const std::string& id) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<RecordKind, Table> tables_;
};

}  // namespace factalign
