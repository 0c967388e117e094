#include "factalign/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/error.hpp"
#include "factalign/text.hpp"

namespace factalign {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' expects a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument,
                "config key '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
}

std::string unquote(std::string value) {
  if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                            (value.front() == '\'' && value.back() == '\''))) {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

void apply(ServiceConfig& c, const std::string& key, const std::string& value) {
  if (key == "listen") {
    const auto colon = value.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::InvalidArgument, "listen must be host:port, got '" + value + "'");
    }
    c.listen_host = value.substr(0, colon);
    c.listen_port = static_cast<int>(parse_int(key, value.substr(colon + 1)));
  } else if (key == "workspace") {
    c.workspace = value;
  } else if (key == "provider") {
    c.provider = value;
  } else if (key == "provider_url") {
    c.provider_url = value;
  } else if (key == "provider_id") {
    c.provider_id = value;
  } else if (key == "provider_dimension") {
    c.provider_dimension = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "provider_timeout_ms") {
    c.provider_timeout = std::chrono::milliseconds(parse_int(key, value));
  } else if (key == "max_in_flight") {
    c.max_in_flight = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "threshold") {
    c.threshold = parse_double(key, value);
  } else if (key == "cluster_threshold") {
    c.cluster_threshold = parse_double(key, value);
  } else if (key == "quorum") {
    c.quorum = parse_double(key, value);
  } else if (key == "overspecification_ratio") {
    c.overspecification_ratio = parse_double(key, value);
  } else if (key == "tie_break") {
    if (value == "lowest") {
      c.tie_break = ThresholdTieBreak::Lowest;
    } else if (value == "highest") {
      c.tie_break = ThresholdTieBreak::Highest;
    } else {
      throw Error(ErrorKind::InvalidArgument, "tie_break must be 'lowest' or 'highest'");
    }
  } else if (key == "language") {
    c.language = value;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  }
}

}  // namespace

void ServiceConfig::validate() const {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(threshold)) throw Error(ErrorKind::InvalidArgument, "threshold must lie in [0, 1]");
  if (!unit(cluster_threshold)) throw Error(ErrorKind::InvalidArgument, "cluster_threshold must lie in [0, 1]");
  if (!unit(overspecification_ratio)) {
    throw Error(ErrorKind::InvalidArgument, "overspecification_ratio must lie in [0, 1]");
  }
  if (!(quorum > 0.0 && quorum <= 1.0)) throw Error(ErrorKind::InvalidArgument, "quorum must lie in (0, 1]");
  if (provider != "fallback" && provider != "http") {
    throw Error(ErrorKind::InvalidArgument, "provider must be 'fallback' or 'http'");
  }
  if (provider == "http" && provider_url.empty()) {
    throw Error(ErrorKind::InvalidArgument, "provider 'http' needs provider_url");
  }
  if (provider_dimension == 0) throw Error(ErrorKind::InvalidArgument, "provider_dimension must be > 0");
}

ServiceConfig parse_config(const std::string& text, ServiceConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto content = trim(line);
    if (content.empty() || content.front() == '#' || content.front() == '[') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidArgument, "config line " + std::to_string(lineno) + " is not key = value");
    }
    auto value = trim(content.substr(eq + 1));
    if (!value.empty() && value.front() != '"' && value.front() != '\'') {
      if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    apply(base, trim(content.substr(0, eq)), unquote(value));
  }
  return base;
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& path) {
  ServiceConfig config;
  if (path && std::filesystem::exists(*path)) {
    std::ifstream in(*path);
    std::stringstream buf;
    buf << in.rdbuf();
    config = parse_config(buf.str());
  }
  if (const char* ws = std::getenv("FACTALIGN_WORKSPACE"); ws && *ws) config.workspace = ws;
  if (const char* url = std::getenv("FACTALIGN_PROVIDER_URL"); url && *url) {
    config.provider_url = url;
    config.provider = "http";
  }
  config.validate();
  return config;
}

void write_config_value(const std::filesystem::path& path, const std::string& key,
                        const std::string& value) {
  std::vector<std::string> lines;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  bool replaced = false;
  for (auto& line : lines) {
    const auto content = trim(line);
    const auto eq = content.find('=');
    if (eq != std::string::npos && trim(content.substr(0, eq)) == key) {
      line = key + " = " + value;
      replaced = true;
    }
  }
  if (!replaced) lines.push_back(key + " = " + value);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::StorageFailure, "cannot write config " + path.string());
  for (const auto& line : lines) out << line << '\n';
}

std::string format_double(double value) { return nlohmann::json(value).dump(); }

}  // namespace factalign
