#include "factalign/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "factalign/error.hpp"

namespace factalign {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr RecordKind kAllKinds[] = {RecordKind::Document,   RecordKind::Annotator, RecordKind::Guideline,
                                    RecordKind::Annotation, RecordKind::Round,     RecordKind::Gold};

std::string_view kind_label(RecordKind kind) {
  switch (kind) {
    case RecordKind::Document: return "document";
    case RecordKind::Annotator: return "annotator";
    case RecordKind::Guideline: return "guideline";
    case RecordKind::Annotation: return "annotation";
    case RecordKind::Round: return "round";
    case RecordKind::Gold: return "gold";
  }
  return "record";
}

void require_id(RecordKind kind, const std::string& id) {
  if (!is_valid_id(id)) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(kind_label(kind)) + " id '" + id + "' must match [A-Za-z0-9._-]+");
  }
}

[[noreturn]] void integrity(const std::string& message) {
  throw Error(ErrorKind::IntegrityViolation, message);
}

void write_file_atomically(const fs::path& target, const std::string& contents) {
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorKind::StorageFailure, "cannot write " + tmp.string());
  std::size_t done = 0;
  while (done < contents.size()) {
    const auto n = ::write(fd, contents.data() + done, contents.size() - done);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorKind::StorageFailure, "short write to " + tmp.string());
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::StorageFailure, "cannot replace " + target.string() + ": " + ec.message());
  // The rename itself is durable only once the directory entry is flushed.
  if (const int dir = ::open(target.parent_path().c_str(), O_RDONLY | O_DIRECTORY); dir >= 0) {
    ::fsync(dir);
    ::close(dir);
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::StorageFailure, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::StorageFailure, "corrupt record " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view directory_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::Document: return "documents";
    case RecordKind::Annotator: return "annotators";
    case RecordKind::Guideline: return "guidelines";
    case RecordKind::Annotation: return "annotations";
    case RecordKind::Round: return "rounds";
    case RecordKind::Gold: return "golds";
  }
  return "records";
}

std::optional<RecordKind> record_kind_from_directory(std::string_view name) {
  for (auto k : kAllKinds) {
    if (directory_name(k) == name) return k;
  }
  return std::nullopt;
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorKind::StorageFailure, "cannot create workspace " + root_.string());
  const fs::path marker = root_ / "workspace.json";
  if (fs::exists(marker)) {
    const auto meta = read_json_file(marker);
    const int version = meta.value("schema_version", -1);
    if (version != kSchemaVersion) {
      throw Error(ErrorKind::StorageFailure, "workspace schema_version " + std::to_string(version) +
                                                 " is not supported (expected " +
                                                 std::to_string(kSchemaVersion) + ")");
    }
  } else {
    write_file_atomically(marker, json{{"schema_version", kSchemaVersion}}.dump(2) + "\n");
  }
  for (auto k : kAllKinds) {
    fs::create_directories(root_ / directory_name(k), ec);
    tables_[k];
  }
  fs::create_directories(root_ / "cache", ec);
  load();
}

void Workspace::load() {
  for (auto k : kAllKinds) {
    auto& t = tables_[k];
    for (const auto& entry : fs::directory_iterator(root_ / directory_name(k))) {
      const auto name = entry.path().filename().string();
      if (!entry.is_regular_file() || name.starts_with(".") || entry.path().extension() != ".json") continue;
      auto record = read_json_file(entry.path());
      const auto id = record.value("id", std::string());
      if (id != entry.path().stem().string()) {
        throw Error(ErrorKind::StorageFailure, "record id does not match file name: " + entry.path().string());
      }
      t.emplace(id, std::move(record));
    }
  }
}

void Workspace::throw_not_found(RecordKind kind, const std::string& id) {
  throw Error(ErrorKind::NotFound, "unknown " + std::string(kind_label(kind)) + " '" + id + "'");
}

const Workspace::Table& Workspace::table(RecordKind kind) const { return tables_.at(kind); }

bool Workspace::contains(RecordKind kind, const std::string& id) const {
  return table(kind).contains(id);
}

void Workspace::write_record(RecordKind kind, const std::string& id, const json& record) {
  write_file_atomically(root_ / directory_name(kind) / (id + ".json"), record.dump(2) + "\n");
  tables_[kind].insert_or_assign(id, record);
}

std::string Workspace::put(const Document& record) {
  require_id(RecordKind::Document, record.id);
  if (trim(record.text).empty()) throw Error(ErrorKind::InvalidArgument, "document text must be non-empty");
  std::unique_lock lock(mutex_);
  write_record(RecordKind::Document, record.id, record);
  return record.id;
}

std::string Workspace::put(const Annotator& record) {
  require_id(RecordKind::Annotator, record.id);
  std::unique_lock lock(mutex_);
  write_record(RecordKind::Annotator, record.id, record);
  return record.id;
}

std::string Workspace::put(const GuidelineVersion& record) {
  require_id(RecordKind::Guideline, record.id);
  std::unique_lock lock(mutex_);
  const auto& guidelines = table(RecordKind::Guideline);
  if (auto it = guidelines.find(record.id); it != guidelines.end()) {
    if (decode<GuidelineVersion>(it->second) == record) return record.id;
    for (const auto& [rid, round] : table(RecordKind::Round)) {
      if (round.at("guideline_version_id") == record.id) {
        integrity("guideline '" + record.id + "' is referenced by round '" + rid +
                  "' and can no longer change; create a new version");
      }
    }
  }
  long long max_other = 0;
  bool any_other = false;
  for (const auto& [gid, g] : guidelines) {
    if (gid == record.id) continue;
    const auto v = g.at("version").get<long long>();
    if (v == record.version) {
      integrity("guideline version " + std::to_string(v) + " already exists as '" + gid + "'");
    }
    max_other = any_other ? std::max(max_other, v) : v;
    any_other = true;
  }
  if (!guidelines.contains(record.id) && any_other && record.version <= max_other) {
    integrity("guideline versions must increase: " + std::to_string(record.version) +
              " <= " + std::to_string(max_other));
  }
  write_record(RecordKind::Guideline, record.id, record);
  return record.id;
}

std::string Workspace::put(const Annotation& record) {
  require_id(RecordKind::Annotation, record.id);
  std::unique_lock lock(mutex_);
  const auto doc = table(RecordKind::Document).find(record.document_id);
  if (doc == table(RecordKind::Document).end()) {
    integrity("annotation '" + record.id + "' references unknown document '" + record.document_id + "'");
  }
  if (!contains(RecordKind::Annotator, record.annotator_id)) {
    integrity("annotation '" + record.id + "' references unknown annotator '" + record.annotator_id + "'");
  }
  if (!contains(RecordKind::Guideline, record.guideline_version_id)) {
    integrity("annotation '" + record.id + "' references unknown guideline '" +
              record.guideline_version_id + "'");
  }
  const auto violations = validate_annotation(record, decode<Document>(doc->second));
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "annotation '" << record.id << "' is invalid:";
    for (const auto& v : violations) {
      msg << " [fact " << (v.fact_index ? std::to_string(*v.fact_index) : "-") << "] " << v.message << ";";
    }
    throw Error(ErrorKind::InvalidArgument, msg.str());
  }
  for (const auto& [aid, a] : table(RecordKind::Annotation)) {
    if (aid != record.id && a.at("document_id") == record.document_id &&
        a.at("annotator_id") == record.annotator_id &&
        a.at("guideline_version_id") == record.guideline_version_id) {
      integrity("annotation '" + aid + "' already covers this document, annotator and guideline");
    }
  }
  for (const auto& [rid, round] : table(RecordKind::Round)) {
    const auto ids = round.at("annotation_ids").get<std::vector<std::string>>();
    if (std::find(ids.begin(), ids.end(), record.id) != ids.end() &&
        round.at("guideline_version_id") != record.guideline_version_id) {
      integrity("annotation '" + record.id + "' belongs to round '" + rid +
                "' under a different guideline version");
    }
  }
  write_record(RecordKind::Annotation, record.id, record);
  return record.id;
}

std::string Workspace::put(const AnnotationRound& record) {
  require_id(RecordKind::Round, record.id);
  std::unique_lock lock(mutex_);
  if (!contains(RecordKind::Guideline, record.guideline_version_id)) {
    integrity("round '" + record.id + "' references unknown guideline '" + record.guideline_version_id + "'");
  }
  std::set<std::string> seen;
  for (const auto& aid : record.annotation_ids) {
    if (!seen.insert(aid).second) {
      throw Error(ErrorKind::InvalidArgument, "round '" + record.id + "' lists annotation '" + aid + "' twice");
    }
    const auto it = table(RecordKind::Annotation).find(aid);
    if (it == table(RecordKind::Annotation).end()) {
      integrity("round '" + record.id + "' references unknown annotation '" + aid + "'");
    }
    if (it->second.at("guideline_version_id") != record.guideline_version_id) {
      integrity("annotation '" + aid + "' does not share the guideline version of round '" + record.id + "'");
    }
  }
  write_record(RecordKind::Round, record.id, record);
  return record.id;
}

std::string Workspace::put(const GoldMatching& record) {
  require_id(RecordKind::Gold, record.id);
  std::unique_lock lock(mutex_);
  const auto& annotations = table(RecordKind::Annotation);
  const auto a = annotations.find(record.annotation_a_id);
  const auto b = annotations.find(record.annotation_b_id);
  if (a == annotations.end() || b == annotations.end()) {
    integrity("gold '" + record.id + "' references an unknown annotation");
  }
  if (a->second.at("document_id") != b->second.at("document_id")) {
    integrity("gold '" + record.id + "' pairs annotations of different documents");
  }
  const auto size_a = a->second.at("facts").size();
  const auto size_b = b->second.at("facts").size();
  std::set<std::size_t> seen_a, seen_b;
  for (const auto& [ia, ib] : record.pairs) {
    if (ia >= size_a || ib >= size_b) {
      throw Error(ErrorKind::InvalidArgument, "gold '" + record.id + "' pair index out of range");
    }
    if (!seen_a.insert(ia).second || !seen_b.insert(ib).second) {
      throw Error(ErrorKind::InvalidArgument, "gold '" + record.id + "' pairs are not injective");
    }
  }
  write_record(RecordKind::Gold, record.id, record);
  return record.id;
}

std::string Workspace::put_json(RecordKind kind, const json& record) {
  switch (kind) {
    case RecordKind::Document: return put(decode<Document>(record));
    case RecordKind::Annotator: return put(decode<Annotator>(record));
    case RecordKind::Guideline: return put(decode<GuidelineVersion>(record));
    case RecordKind::Annotation: return put(decode<Annotation>(record));
    case RecordKind::Round: return put(decode<AnnotationRound>(record));
    case RecordKind::Gold: return put(decode<GoldMatching>(record));
  }
  throw Error(ErrorKind::InvalidArgument, "unknown record kind");
}

std::optional<json> Workspace::get_json(RecordKind kind, const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto& t = table(kind);
  auto it = t.find(id);
  if (it == t.end()) return std::nullopt;
  return std::optional<json>(std::in_place, it->second);
}

std::vector<json> Workspace::list_json(RecordKind kind) const {
  std::shared_lock lock(mutex_);
  std::vector<json> out;
  for (const auto& [id, j] : table(kind)) out.push_back(j);
  return out;
}

bool Workspace::remove(RecordKind kind, const std::string& id) {
  std::unique_lock lock(mutex_);
  auto& t = tables_[kind];
  if (!t.erase(id)) return false;
  std::error_code ec;
  fs::remove(root_ / directory_name(kind) / (id + ".json"), ec);
  if (ec) throw Error(ErrorKind::StorageFailure, "cannot delete " + id + ": " + ec.message());
  return true;
}

std::vector<Annotation> Workspace::list_round_annotations(const std::string& round_id) const {
  std::shared_lock lock(mutex_);
  const auto it = table(RecordKind::Round).find(round_id);
  if (it == table(RecordKind::Round).end()) {
    throw Error(ErrorKind::UnknownRound, "unknown round '" + round_id + "'");
  }
  const auto round = decode<AnnotationRound>(it->second);
  std::vector<Annotation> out;
  for (const auto& aid : round.annotation_ids) {
    const auto a = table(RecordKind::Annotation).find(aid);
    if (a == table(RecordKind::Annotation).end()) {
      integrity("round '" + round_id + "' references missing annotation '" + aid + "'");
    }
    out.push_back(decode<Annotation>(a->second));
  }
  std::sort(out.begin(), out.end(), [](const Annotation& x, const Annotation& y) {
    return std::tie(x.annotator_id, x.id) < std::tie(y.annotator_id, y.id);
  });
  return out;
}

std::vector<Annotation> Workspace::document_annotations(const std::string& document_id) const {
  std::shared_lock lock(mutex_);
  std::vector<Annotation> out;
  for (const auto& [id, j] : table(RecordKind::Annotation)) {
    if (j.at("document_id") == document_id) out.push_back(decode<Annotation>(j));
  }
  std::sort(out.begin(), out.end(), [](const Annotation& x, const Annotation& y) {
    return std::tie(x.annotator_id, x.id) < std::tie(y.annotator_id, y.id);
  });
  return out;
}

}  // namespace factalign
