// factalign command-line front end. Every subcommand prints the same JSON
// document the HTTP API returns for the equivalent request.
//
// Exit codes: 0 success, 1 validation error, 2 I/O or provider failure.

#include <pthread.h>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "factalign/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace factalign;

namespace {

struct Globals {
  std::string workspace;
  std::string config;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::StorageFailure, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
}

// The config file defaults to <workspace>/factalign.toml; it is read when
// present and is the target of `calibrate --apply`.
std::pair<ServiceConfig, fs::path> resolve_config(const Globals& g) {
  std::optional<fs::path> explicit_path;
  if (!g.config.empty()) explicit_path = g.config;
  ServiceConfig probe = load_config(explicit_path);
  if (!g.workspace.empty()) probe.workspace = g.workspace;
  if (explicit_path) return {probe, *explicit_path};

  const fs::path implicit = probe.workspace / "factalign.toml";
  if (!fs::exists(implicit)) return {probe, implicit};
  ServiceConfig config = load_config(implicit);
  if (!g.workspace.empty()) config.workspace = g.workspace;
  return {config, implicit};
}

service::Workbench open_workbench(const Globals& g) {
  auto [config, path] = resolve_config(g);
  return service::Workbench(config, path);
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

json import_corpus(service::Workbench& wb, const fs::path& dir, const std::string& language) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::StorageFailure, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".txt" || ext == ".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  json ids = json::array();
  for (const auto& file : files) {
    Document doc;
    if (file.extension() == ".txt") {
      doc.id = file.stem().string();
      doc.text = read_file(file);
      doc.language = language;
    } else {
      auto j = read_json_file(file);
      if (j.is_object() && !j.contains("id")) j["id"] = file.stem().string();
      if (j.is_object() && !j.contains("language")) j["language"] = language;
      doc = decode<Document>(j);
    }
    ids.push_back(wb.workspace().put(doc));
  }
  return json{{"imported", ids.size()}, {"document_ids", ids}};
}

std::optional<RecordKind> parse_kind(const std::string& name) {
  return record_kind_from_directory(name);
}

int serve(service::Workbench& wb, const std::string& listen) {
  std::string host = wb.config().listen_host;
  int port = wb.config().listen_port;
  if (!listen.empty()) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--listen expects host:port");
    host = listen.substr(0, colon);
    port = std::stoi(listen.substr(colon + 1));
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::HttpServer server(wb);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cerr << "listening on " << host << ':' << port << '\n';
  const bool ok = server.listen(host, port);
  if (!ok) {
    std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
    pthread_kill(waiter.native_handle(), SIGTERM);
  }
  waiter.join();
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fact-extraction alignment workbench"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--workspace,-w", g.workspace, "Workspace directory (overrides config and environment)");
  app.add_option("--config,-c", g.config, "Config file (default: <workspace>/factalign.toml)");

  std::function<int()> action;

  auto* import_cmd = app.add_subcommand("import", "Ingest a corpus directory (.txt or .json per document)");
  std::string import_dir;
  std::string import_language = "en";
  import_cmd->add_option("dir", import_dir)->required();
  import_cmd->add_option("--language", import_language, "Language of .txt documents");
  import_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(import_corpus(wb, import_dir, import_language));
      return 0;
    };
  });

  auto* annotate_cmd = app.add_subcommand("annotate-import", "Import fact lists produced outside the engine");
  std::string annotate_file;
  annotate_cmd->add_option("file", annotate_file)->required();
  annotate_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.import_annotations(read_json_file(annotate_file)));
      return 0;
    };
  });

  auto* put_cmd = app.add_subcommand("put", "Store one record from a JSON file");
  std::string put_kind;
  std::string put_file;
  put_cmd->add_option("kind", put_kind, "documents|annotators|guidelines|annotations|rounds|golds")->required();
  put_cmd->add_option("file", put_file)->required();
  put_cmd->callback([&] {
    action = [&] {
      const auto kind = parse_kind(put_kind);
      if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown record kind '" + put_kind + "'");
      auto wb = open_workbench(g);
      const auto id = wb.workspace().put_json(*kind, read_json_file(put_file));
      print(*wb.workspace().get_json(*kind, id));
      return 0;
    };
  });

  auto* get_cmd = app.add_subcommand("get", "Print one stored record");
  std::string get_kind;
  std::string get_id;
  get_cmd->add_option("kind", get_kind)->required();
  get_cmd->add_option("id", get_id)->required();
  get_cmd->callback([&] {
    action = [&] {
      const auto kind = parse_kind(get_kind);
      if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown record kind '" + get_kind + "'");
      auto wb = open_workbench(g);
      auto record = wb.workspace().get_json(*kind, get_id);
      if (!record) throw Error(ErrorKind::NotFound, get_kind + " record '" + get_id + "' not found");
      print(*record);
      return 0;
    };
  });

  auto* match_cmd = app.add_subcommand("match", "Align the facts of two annotations");
  std::string match_a;
  std::string match_b;
  std::optional<double> match_threshold;
  match_cmd->add_option("annotation_a", match_a)->required();
  match_cmd->add_option("annotation_b", match_b)->required();
  match_cmd->add_option("--threshold", match_threshold)->check(CLI::Range(0.0, 1.0));
  match_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.match(match_a, match_b, match_threshold));
      return 0;
    };
  });

  auto* heatmap_cmd = app.add_subcommand("heatmap", "Pairwise IAA matrix for one document");
  std::string heatmap_doc;
  std::optional<std::string> heatmap_round;
  heatmap_cmd->add_option("--document", heatmap_doc)->required();
  heatmap_cmd->add_option("--round", heatmap_round);
  heatmap_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.heatmap(heatmap_doc, heatmap_round));
      return 0;
    };
  });

  auto* histogram_cmd = app.add_subcommand("histogram", "Facts per annotation and per annotator");
  std::optional<std::string> histogram_round;
  histogram_cmd->add_option("--round", histogram_round);
  histogram_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.histogram(histogram_round));
      return 0;
    };
  });

  auto* convergence_cmd = app.add_subcommand("convergence", "Mean IAA per round across guideline versions");
  convergence_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.convergence());
      return 0;
    };
  });

  auto* coverage_cmd = app.add_subcommand("coverage", "Project anchored facts onto the source text");
  std::string coverage_annotation;
  coverage_cmd->add_option("annotation", coverage_annotation)->required();
  coverage_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.coverage(coverage_annotation));
      return 0;
    };
  });

  auto* branching_cmd = app.add_subcommand("branching", "Parse a sentence into its logic tree");
  std::string branching_sentence;
  std::optional<std::string> branching_language;
  branching_cmd->add_option("sentence", branching_sentence)->required();
  branching_cmd->add_option("--language", branching_language);
  branching_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.branching(branching_sentence, branching_language));
      return 0;
    };
  });

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit the matching threshold to gold matchings");
  std::vector<std::string> calibrate_golds;
  std::optional<double> calibrate_step;
  bool calibrate_apply = false;
  calibrate_cmd->add_option("--gold", calibrate_golds, "Gold matching id (repeatable; default: all)");
  calibrate_cmd->add_option("--grid-step", calibrate_step);
  calibrate_cmd->add_flag("--apply", calibrate_apply, "Write the best threshold to the config file");
  calibrate_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.calibrate(calibrate_golds, calibrate_step, calibrate_apply));
      return 0;
    };
  });

  auto* consensus_cmd = app.add_subcommand("consensus", "Majority-vote facts for a round");
  std::string consensus_round;
  std::optional<double> consensus_quorum;
  consensus_cmd->add_option("--round", consensus_round)->required();
  consensus_cmd->add_option("--quorum", consensus_quorum);
  consensus_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(wb.consensus(consensus_round, consensus_quorum));
      return 0;
    };
  });

  auto* report_cmd = app.add_subcommand("report", "Write every plot-ready JSON view");
  std::string report_dir;
  report_cmd->add_option("out_dir", report_dir)->required();
  report_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print(json{{"written", wb.write_report(report_dir)}});
      return 0;
    };
  });

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string serve_listen;
  serve_cmd->add_option("--listen", serve_listen, "host:port (overrides config)");
  serve_cmd->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      return serve(wb, serve_listen);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return service::exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
