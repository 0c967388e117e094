#pragma once

#include <filesystem>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/config.hpp"
#include "factalign/embedding.hpp"
#include "factalign/error.hpp"
#include "factalign/store.hpp"

namespace factalign::service {

/// Builds the provider selected by the configuration.
std::unique_ptr<EmbeddingProvider> make_provider(const ServiceConfig& config);

/// Shared back end of the HTTP API and the CLI. Every method is a thin
/// wrapper over one module operation and returns the JSON document that
/// both front ends emit.
class Workbench {
 public:
  explicit Workbench(ServiceConfig config,
                     std::optional<std::filesystem::path> config_path = std::nullopt);
  /// Uses an externally owned provider (tests, embedding experiments).
  Workbench(ServiceConfig config, std::unique_ptr<EmbeddingProvider> provider,
            std::optional<std::filesystem::path> config_path = std::nullopt);

  Workspace& workspace() { return workspace_; }
  /// Snapshot; the threshold reflects any applied calibration.
  ServiceConfig config() const;
  const Embedder& embedder() const { return embedder_; }

  nlohmann::json match(const std::string& annotation_a, const std::string& annotation_b,
                       std::optional<double> threshold = std::nullopt);
  /// Without a round, uses each annotator's annotation under the highest
  /// guideline version for the document.
  nlohmann::json heatmap(const std::string& document_id, const std::optional<std::string>& round_id);
  nlohmann::json histogram(const std::optional<std::string>& round_id);
  nlohmann::json convergence();
  nlohmann::json coverage(const std::string& annotation_id);
  nlohmann::json redundancy(const std::string& annotation_id, std::optional<double> threshold);
  nlohmann::json source_graph(const std::string& document_id);
  nlohmann::json fact_graphs(const std::string& annotation_id);
  nlohmann::json highlights(const std::string& annotation_id);
  /// Body is {"reference": graph, "candidate": graph} or
  /// {"document": id, "annotation": id} (source graph vs fact-list graph).
  nlohmann::json graph_diff(const nlohmann::json& body);
  nlohmann::json branching(const std::string& sentence, const std::optional<std::string>& language);
  /// Empty gold_ids selects every stored gold. With apply, the best
  /// threshold becomes the configured threshold (and is written to the
  /// config file when one is known).
  nlohmann::json calibrate(const std::vector<std::string>& gold_ids, std::optional<double> grid_step,
                           bool apply);
  nlohmann::json consensus(const std::string& round_id, std::optional<double> quorum);

  /// Fact lists produced outside the engine (e.g. LLM output), see README.
  nlohmann::json import_annotations(const nlohmann::json& batch);

  /// Writes every plot-ready JSON view of the workspace under out_dir.
  /// Returns the list of written files relative to out_dir.
  std::vector<std::string> write_report(const std::filesystem::path& out_dir);

 private:
  Annotation load_annotation(const std::string& id) const;

  ServiceConfig config_;
  std::optional<std::filesystem::path> config_path_;
  Workspace workspace_;
  std::unique_ptr<EmbeddingProvider> provider_;
  EmbeddingCache cache_;
  Embedder embedder_;
  std::atomic<double> threshold_;
  std::mutex writer_;
};

/// HTTP status for an error kind (400, 404, 409, 500, 502).
int http_status(ErrorKind kind);

/// CLI exit code for an error kind: 2 for I/O and provider failures, else 1.
int exit_code(ErrorKind kind);

/// JSON API over a Workbench. Runs on cpp-httplib worker threads.
class HttpServer {
 public:
  explicit HttpServer(Workbench& workbench);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (or -1).
  int bind_to_any_port(const std::string& host);
  /// Serves on a port bound with bind_to_any_port; blocks until stop().
  bool listen_after_bind();
  void stop();
  bool is_running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace factalign::service
