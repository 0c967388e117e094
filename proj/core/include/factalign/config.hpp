#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "factalign/calibration.hpp"

namespace factalign {

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8765;
  std::filesystem::path workspace = "workspace";

  std::string provider = "fallback";  // "fallback" or "http"
  std::string provider_url;
  std::string provider_id = "http";
  std::size_t provider_dimension = FallbackEmbedder::kDefaultDimension;
  std::chrono::milliseconds provider_timeout{10000};
  std::size_t max_in_flight = 4;

  double threshold = kDefaultThreshold;
  double cluster_threshold = 0.8;
  double quorum = 0.5;
  double overspecification_ratio = 0.5;
  ThresholdTieBreak tie_break = ThresholdTieBreak::Lowest;
  std::string language = "en";

  /// Throws InvalidArgument when a threshold leaves [0, 1], the quorum
  /// leaves (0, 1], or the provider selection is incomplete.
  void validate() const;
};

/// Parses `key = value` lines (TOML subset: comments, quoted or bare
/// values). Unknown keys are rejected.
ServiceConfig parse_config(const std::string& text, ServiceConfig base = {});

/// Reads the file when it exists, then applies FACTALIGN_WORKSPACE and
/// FACTALIGN_PROVIDER_URL from the environment, then validates.
ServiceConfig load_config(const std::optional<std::filesystem::path>& path);

/// Rewrites (or appends) a single key in a config file, keeping other lines.
void write_config_value(const std::filesystem::path& path, const std::string& key,
                        const std::string& value);

std::string format_double(double value);

}  // namespace factalign
