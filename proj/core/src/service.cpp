#include "factalign/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "factalign/analytics.hpp"
#include "factalign/branching.hpp"
#include "factalign/calibration.hpp"
#include "factalign/kg.hpp"
#include "factalign/matching.hpp"

namespace factalign::service {

namespace fs = std::filesystem;
using nlohmann::json;

std::unique_ptr<EmbeddingProvider> make_provider(const ServiceConfig& config) {
  if (config.provider == "http") {
    HttpProviderOptions opts;
    opts.base_url = config.provider_url;
    opts.provider_id = config.provider_id;
    opts.dimension = config.provider_dimension;
    opts.timeout = config.provider_timeout;
    opts.max_in_flight = config.max_in_flight;
    return std::make_unique<HttpEmbeddingProvider>(std::move(opts));
  }
  return std::make_unique<FallbackEmbedder>(config.provider_dimension);
}

Workbench::Workbench(ServiceConfig config, std::optional<fs::path> config_path)
    : Workbench(config, make_provider(config), std::move(config_path)) {}

Workbench::Workbench(ServiceConfig config, std::unique_ptr<EmbeddingProvider> provider,
                     std::optional<fs::path> config_path)
    : config_(std::move(config)),
      config_path_(std::move(config_path)),
      workspace_(config_.workspace),
      provider_(std::move(provider)),
      cache_(workspace_.embedding_cache_path()),
      embedder_(*provider_, &cache_),
      threshold_(config_.threshold) {
  config_.validate();
}

ServiceConfig Workbench::config() const {
  ServiceConfig c = config_;
  c.threshold = threshold_.load();
  return c;
}

Annotation Workbench::load_annotation(const std::string& id) const {
  return workspace_.require<Annotation>(id);
}

json Workbench::match(const std::string& annotation_a, const std::string& annotation_b,
                      std::optional<double> threshold) {
  const auto a = load_annotation(annotation_a);
  const auto b = load_annotation(annotation_b);
  return match_annotations(a, b, embedder_, threshold.value_or(threshold_.load()));
}

json Workbench::heatmap(const std::string& document_id, const std::optional<std::string>& round_id) {
  workspace_.require<Document>(document_id);
  std::vector<Annotation> selected;
  if (round_id) {
    for (auto& a : workspace_.list_round_annotations(*round_id)) {
      if (a.document_id == document_id) selected.push_back(std::move(a));
    }
  } else {
    std::map<std::string, std::pair<long long, Annotation>> latest;
    for (auto& a : workspace_.document_annotations(document_id)) {
      const auto version = workspace_.require<GuidelineVersion>(a.guideline_version_id).version;
      auto it = latest.find(a.annotator_id);
      if (it == latest.end() || it->second.first < version) {
        std::string annotator = a.annotator_id;
        latest.insert_or_assign(std::move(annotator), std::make_pair(version, std::move(a)));
      }
    }
    for (auto& [annotator, entry] : latest) selected.push_back(std::move(entry.second));
  }
  return iaa_matrix(selected, embedder_, threshold_.load());
}

json Workbench::histogram(const std::optional<std::string>& round_id) {
  const auto annotations =
      round_id ? workspace_.list_round_annotations(*round_id) : workspace_.list<Annotation>();
  return fact_count_report(annotations);
}

json Workbench::convergence() {
  std::vector<RoundInput> inputs;
  for (auto& round : workspace_.list<AnnotationRound>()) {
    RoundInput in;
    in.guideline_version = workspace_.require<GuidelineVersion>(round.guideline_version_id).version;
    in.annotations = workspace_.list_round_annotations(round.id);
    in.round = std::move(round);
    inputs.push_back(std::move(in));
  }
  return convergence_series(inputs, embedder_, threshold_.load());
}

json Workbench::coverage(const std::string& annotation_id) {
  const auto a = load_annotation(annotation_id);
  const auto doc = workspace_.require<Document>(a.document_id);
  return coverage_report(doc, a, config_.overspecification_ratio);
}

json Workbench::redundancy(const std::string& annotation_id, std::optional<double> threshold) {
  const double t = threshold.value_or(config_.cluster_threshold);
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::InvalidArgument, "threshold must lie in [0, 1]");
  return redundancy_pairs(load_annotation(annotation_id), embedder_, t);
}

json Workbench::source_graph(const std::string& document_id) {
  return kg::source_graph(workspace_.require<Document>(document_id));
}

json Workbench::fact_graphs(const std::string& annotation_id) {
  const auto a = load_annotation(annotation_id);
  const auto doc = workspace_.require<Document>(a.document_id);
  return kg::fact_small_multiples(a, doc.language);
}

json Workbench::highlights(const std::string& annotation_id) {
  const auto a = load_annotation(annotation_id);
  const auto doc = workspace_.require<Document>(a.document_id);
  return kg::highlight_entities(a, kg::source_graph(doc));
}

json Workbench::graph_diff(const json& body) {
  if (!body.is_object()) throw Error(ErrorKind::InvalidArgument, "diff body must be a JSON object");
  if (body.contains("reference") && body.contains("candidate")) {
    return kg::graph_diff(decode<kg::KnowledgeGraph>(body.at("reference")),
                          decode<kg::KnowledgeGraph>(body.at("candidate")));
  }
  if (body.contains("document") && body.contains("annotation")) {
    const auto doc = workspace_.require<Document>(body.at("document").get<std::string>());
    const auto a = load_annotation(body.at("annotation").get<std::string>());
    return kg::graph_diff(kg::source_graph(doc), kg::fact_list_graph(a, doc.language));
  }
  throw Error(ErrorKind::InvalidArgument,
              "diff body needs {reference, candidate} graphs or {document, annotation} ids");
}

json Workbench::branching(const std::string& sentence, const std::optional<std::string>& language) {
  const auto lang = language.value_or(config_.language);
  const auto tree = branching::parse_logic(sentence, lang);
  const auto [lo, hi] = branching::fact_count_bounds(tree);
  return json{{"tree", tree},
              {"decompositions", branching::enumerate_decompositions(tree, lang)},
              {"fact_count_bounds", {{"min", lo}, {"max", hi}}}};
}

json Workbench::calibrate(const std::vector<std::string>& gold_ids, std::optional<double> grid_step,
                          bool apply) {
  std::vector<GoldMatching> golds;
  if (gold_ids.empty()) {
    golds = workspace_.list<GoldMatching>();
  } else {
    for (const auto& id : gold_ids) golds.push_back(workspace_.require<GoldMatching>(id));
  }
  std::vector<GoldCase> cases;
  for (auto& g : golds) {
    GoldCase c{g, load_annotation(g.annotation_a_id), load_annotation(g.annotation_b_id)};
    cases.push_back(std::move(c));
  }
  const auto report =
      calibrate_threshold(cases, embedder_, grid_step.value_or(kDefaultGridStep), config_.tie_break);
  json out = report;
  out["applied"] = false;
  if (apply) {
    std::lock_guard lock(writer_);
    threshold_.store(report.best_threshold);
    if (config_path_) write_config_value(*config_path_, "threshold", format_double(report.best_threshold));
    out["applied"] = true;
  }
  return out;
}

json Workbench::consensus(const std::string& round_id, std::optional<double> quorum) {
  const double q = quorum.value_or(config_.quorum);
  std::map<std::string, std::vector<Annotation>> by_document;
  for (auto& a : workspace_.list_round_annotations(round_id)) by_document[a.document_id].push_back(std::move(a));
  json out = json::array();
  for (const auto& [doc, annotations] : by_document) {
    std::set<std::string> annotators;
    for (const auto& a : annotations) annotators.insert(a.annotator_id);
    const auto clusters = cluster_facts(annotations, embedder_, config_.cluster_threshold);
    for (const auto& fact : majority_vote(clusters, annotators.size(), q)) {
      json entry = fact;
      entry["document_id"] = doc;
      out.push_back(std::move(entry));
    }
  }
  return out;
}

json Workbench::import_annotations(const json& batch) {
  if (!batch.is_object()) throw Error(ErrorKind::InvalidArgument, "import batch must be a JSON object");
  std::lock_guard lock(writer_);
  std::string annotator_id;
  if (batch.contains("annotator")) {
    const auto annotator = decode<Annotator>(batch.at("annotator"));
    workspace_.put(annotator);
    annotator_id = annotator.id;
  } else {
    annotator_id = batch.at("annotator_id").get<std::string>();
    workspace_.require<Annotator>(annotator_id);
  }
  if (!batch.contains("guideline_version_id") || !batch.contains("annotations")) {
    throw Error(ErrorKind::InvalidArgument, "import batch needs guideline_version_id and annotations");
  }
  const auto guideline = batch.at("guideline_version_id").get<std::string>();
  const auto created_at =
      batch.contains("created_at") ? decode<Timestamp>(batch.at("created_at")) : Timestamp::now();

  json ids = json::array();
  std::vector<std::string> new_ids;
  for (const auto& item : batch.at("annotations")) {
    Annotation a;
    a.document_id = item.at("document_id").get<std::string>();
    a.annotator_id = annotator_id;
    a.guideline_version_id = guideline;
    a.id = item.value("id", a.document_id + "." + annotator_id + "." + guideline);
    a.created_at = created_at;
    for (const auto& f : item.at("facts")) {
      a.facts.push_back(f.is_string() ? Fact{f.get<std::string>(), {}} : decode<Fact>(f));
    }
    workspace_.put(a);
    ids.push_back(a.id);
    new_ids.push_back(a.id);
  }

  json out = {{"annotator_id", annotator_id}, {"annotation_ids", ids}};
  if (batch.contains("round_id")) {
    const auto round_id = batch.at("round_id").get<std::string>();
    auto round = workspace_.get<AnnotationRound>(round_id).value_or(AnnotationRound{round_id, guideline, {}, ""});
    for (const auto& id : new_ids) {
      if (std::find(round.annotation_ids.begin(), round.annotation_ids.end(), id) == round.annotation_ids.end()) {
        round.annotation_ids.push_back(id);
      }
    }
    workspace_.put(round);
    out["round_id"] = round_id;
  }
  return out;
}

std::vector<std::string> Workbench::write_report(const fs::path& out_dir) {
  std::vector<std::string> written;
  const auto emit = [&](const fs::path& rel, const json& body) {
    const auto path = out_dir / rel;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::StorageFailure, "cannot write " + path.string());
    out << body.dump(2) << '\n';
    written.push_back(rel.generic_string());
  };
  const auto error_json = [](const Error& e) {
    return json{{"error", to_string(e.kind())}, {"message", e.what()}};
  };

  emit("histogram/all.json", histogram(std::nullopt));
  for (const auto& round : workspace_.list<AnnotationRound>()) {
    emit(fs::path("histogram") / (round.id + ".json"), histogram(round.id));
    std::map<std::string, int> per_document;
    for (const auto& a : workspace_.list_round_annotations(round.id)) ++per_document[a.document_id];
    for (const auto& [doc, count] : per_document) {
      if (count >= 2) emit(fs::path("heatmap") / round.id / (doc + ".json"), heatmap(doc, round.id));
    }
    emit(fs::path("consensus") / (round.id + ".json"), consensus(round.id, std::nullopt));
  }
  try {
    emit("convergence.json", convergence());
  } catch (const Error& e) {
    emit("convergence.json", error_json(e));
  }
  for (const auto& doc : workspace_.list<Document>()) {
    emit(fs::path("graphs") / "source" / (doc.id + ".json"), source_graph(doc.id));
  }
  for (const auto& a : workspace_.list<Annotation>()) {
    emit(fs::path("coverage") / (a.id + ".json"), coverage(a.id));
    emit(fs::path("graphs") / "facts" / (a.id + ".json"), fact_graphs(a.id));
    emit(fs::path("graphs") / "diff" / (a.id + ".json"),
         graph_diff(json{{"document", a.document_id}, {"annotation", a.id}}));
  }
  if (!workspace_.list<GoldMatching>().empty()) {
    emit("calibration.json", calibrate({}, std::nullopt, false));
  }
  return written;
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::UnknownRound: return 404;
    case ErrorKind::IntegrityViolation: return 409;
    case ErrorKind::ProviderUnavailable: return 502;
    case ErrorKind::StorageFailure: return 500;
    default: return 400;
  }
}

int exit_code(ErrorKind kind) {
  return kind == ErrorKind::StorageFailure || kind == ErrorKind::ProviderUnavailable ? 2 : 1;
}

struct HttpServer::Impl {
  explicit Impl(Workbench& wb) : workbench(wb) {}

  Workbench& workbench;
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
  send_json(res, json{{"error", to_string(kind)}, {"message", message}}, http_status(kind));
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

std::string required_param(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) throw Error(ErrorKind::InvalidArgument, "missing query parameter '" + name + "'");
  return req.get_param_value(name);
}

std::optional<std::string> optional_param(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

std::optional<double> optional_number_param(const httplib::Request& req, const std::string& name) {
  const auto raw = optional_param(req, name);
  if (!raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(*raw, &used);
    if (used == raw->size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidArgument, "query parameter '" + name + "' must be a number");
}

template <typename T>
std::optional<T> body_field(const json& body, const char* key) {
  if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T required_field(const json& body, const char* key) {
  auto v = body_field<T>(body, key);
  if (!v) throw Error(ErrorKind::InvalidArgument, std::string("missing field '") + key + "'");
  return std::move(*v);
}

using JsonHandler = std::function<json(const httplib::Request&)>;

httplib::Server::Handler guarded(JsonHandler handler) {
  return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, handler(req));
    } catch (const Error& e) {
      send_error(res, e.kind(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorKind::InvalidArgument, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
      send_error(res, ErrorKind::StorageFailure, e.what());
    }
  };
}

}  // namespace

HttpServer::HttpServer(Workbench& workbench) : impl_(std::make_unique<Impl>(workbench)) {
  auto& srv = impl_->server;
  auto& wb = impl_->workbench;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_json(res, json{{"error", "internal"}, {"message", e.what()}}, 500);
    } catch (...) {
      send_json(res, json{{"error", "internal"}, {"message", "unknown failure"}}, 500);
    }
  });

  srv.Get("/health", guarded([&wb](const httplib::Request&) {
            return json{{"status", "ok"}, {"provider", wb.embedder().provider().id()}};
          }));

  for (const auto kind : {RecordKind::Document, RecordKind::Annotator, RecordKind::Guideline,
                          RecordKind::Annotation, RecordKind::Round, RecordKind::Gold}) {
    const std::string base = "/" + std::string(directory_name(kind));
    srv.Get(base, guarded([&wb, kind](const httplib::Request&) { return json(wb.workspace().list_json(kind)); }));
    srv.Get(base + R"(/([^/]+))", guarded([&wb, kind](const httplib::Request& req) {
              const std::string id = req.matches[1];
              auto record = wb.workspace().get_json(kind, id);
              if (!record) {
                throw Error(ErrorKind::NotFound, std::string(directory_name(kind)) + " record '" + id + "' not found");
              }
              return *record;
            }));
    srv.Put(base + R"(/([^/]+))", guarded([&wb, kind](const httplib::Request& req) {
              const std::string id = req.matches[1];
              auto body = parse_body(req);
              if (!body.is_object()) throw Error(ErrorKind::InvalidArgument, "record must be a JSON object");
              if (!body.contains("id")) body["id"] = id;
              if (body.at("id") != id) {
                throw Error(ErrorKind::InvalidArgument, "record id does not match the URL");
              }
              wb.workspace().put_json(kind, body);
              return *wb.workspace().get_json(kind, id);
            }));
  }

  srv.Post("/annotations/import", guarded([&wb](const httplib::Request& req) {
             return wb.import_annotations(parse_body(req));
           }));
  srv.Post("/match", guarded([&wb](const httplib::Request& req) {
             const auto body = parse_body(req);
             return wb.match(required_field<std::string>(body, "annotation_a"),
                             required_field<std::string>(body, "annotation_b"),
                             body_field<double>(body, "threshold"));
           }));
  srv.Get("/heatmap", guarded([&wb](const httplib::Request& req) {
            return wb.heatmap(required_param(req, "document"), optional_param(req, "round"));
          }));
  srv.Get("/histogram", guarded([&wb](const httplib::Request& req) {
            return wb.histogram(optional_param(req, "round"));
          }));
  srv.Get("/convergence", guarded([&wb](const httplib::Request&) { return wb.convergence(); }));
  srv.Get("/coverage", guarded([&wb](const httplib::Request& req) {
            return wb.coverage(required_param(req, "annotation"));
          }));
  srv.Get("/redundancy", guarded([&wb](const httplib::Request& req) {
            return wb.redundancy(required_param(req, "annotation"), optional_number_param(req, "threshold"));
          }));
  srv.Get("/graphs/source", guarded([&wb](const httplib::Request& req) {
            return wb.source_graph(required_param(req, "document"));
          }));
  srv.Get("/graphs/facts", guarded([&wb](const httplib::Request& req) {
            return wb.fact_graphs(required_param(req, "annotation"));
          }));
  srv.Get("/graphs/highlights", guarded([&wb](const httplib::Request& req) {
            return wb.highlights(required_param(req, "annotation"));
          }));
  srv.Post("/graphs/diff", guarded([&wb](const httplib::Request& req) { return wb.graph_diff(parse_body(req)); }));
  srv.Post("/branching/parse", guarded([&wb](const httplib::Request& req) {
             const auto body = parse_body(req);
             return wb.branching(required_field<std::string>(body, "sentence"),
                                 body_field<std::string>(body, "language"));
           }));
  srv.Post("/calibrate", guarded([&wb](const httplib::Request& req) {
             const auto body = parse_body(req);
             return wb.calibrate(body_field<std::vector<std::string>>(body, "gold_ids").value_or(
                                     std::vector<std::string>{}),
                                 body_field<double>(body, "grid_step"),
                                 body_field<bool>(body, "apply").value_or(false));
           }));
  srv.Post("/consensus", guarded([&wb](const httplib::Request& req) {
             const auto body = parse_body(req);
             return wb.consensus(required_field<std::string>(body, "round"), body_field<double>(body, "quorum"));
           }));
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::is_running() const { return impl_->server.is_running(); }

}  // namespace factalign::service
