#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "finmoral/errors.hpp"
#include "finmoral/text.hpp"

namespace finmoral {

inline constexpr double kLambdaWtq = 0.3;
inline constexpr double kLambdaFtq = 0.4;
inline constexpr std::string_view kConfigEnv = "FINMORAL_CONFIG";

/// Pipeline settings. File format: flat `key=value` lines, `#` comments.
///
/// Keys: lambda, dataset (wtq|ftq), k, temperature, top_p, dimension,
/// depth, beam, seed, shim_url, timeout_s, fewshot_file, synonyms_file,
/// mock_fixture_file. Missing keys keep their defaults; a missing lambda
/// follows the dataset tag.
struct PipelineConfig {
  std::optional<double> lambda;
  std::string dataset = "wtq";
  int k = 5;
  double temperature = 0.3;
  double top_p = 0.95;
  std::size_t dimension = 64;
  std::size_t depth = 3;
  std::size_t beam = 5;
  std::uint64_t seed = 42;
  std::optional<std::string> shim_url;
  double timeout_s = 30.0;
  std::optional<std::string> fewshot_file;
  std::optional<std::string> synonyms_file;
  std::optional<std::string> mock_fixture_file;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

  double resolved_lambda() const {
    if (lambda) return *lambda;
    if (dataset == "wtq") return kLambdaWtq;
    if (dataset == "ftq") return kLambdaFtq;
    throw ConfigError("unknown dataset tag \"" + dataset + "\" and no lambda given");
  }

  void validate() const {
    if (lambda && !(*lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!lambda && dataset != "wtq" && dataset != "ftq") {
      throw ConfigError("unknown dataset tag \"" + dataset + "\" and no lambda given");
    }
    if (k < 1) throw ConfigError("k must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    if (dimension < 1) throw ConfigError("dimension must be >= 1");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (beam < 1) throw ConfigError("beam must be >= 1");
    if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be > 0");
  }

  /// Without a shim the natural module needs scripted responses.
  void validate_backends(bool cot_enabled) const {
    if (cot_enabled && !shim_url && !mock_fixture_file) {
      throw ConfigError("no generation backend: set shim_url or mock_fixture_file");
    }
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ConfigError("cannot format number");
  return std::string(buf, end);
}

inline double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError("key " + std::string(key) + ": invalid number \"" + std::string(v) + "\"");
  }
  return out;
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view v) {
  T out{};
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError("key " + std::string(key) + ": invalid integer \"" + std::string(v) + "\"");
  }
  return out;
}

inline int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError("key " + std::string(key) + ": invalid integer \"" + std::string(v) + "\"");
  }
  return out;
}

}  // namespace detail

/// Parses config text. Unknown keys and malformed lines are errors naming
/// the line. Paths are kept as written.
inline PipelineConfig parse_config(std::string_view content) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const std::string_view raw = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string_view v = text::trim(line.substr(eq + 1));
    if (key == "lambda") {
      cfg.lambda = detail::parse_double(key, v);
    } else if (key == "dataset") {
      cfg.dataset = text::lower(v);
    } else if (key == "k") {
      cfg.k = detail::parse_int(key, v);
    } else if (key == "temperature") {
      cfg.temperature = detail::parse_double(key, v);
    } else if (key == "top_p") {
      cfg.top_p = detail::parse_double(key, v);
    } else if (key == "dimension") {
      cfg.dimension = detail::parse_unsigned<std::size_t>(key, v);
    } else if (key == "depth") {
      cfg.depth = detail::parse_unsigned<std::size_t>(key, v);
    } else if (key == "beam") {
      cfg.beam = detail::parse_unsigned<std::size_t>(key, v);
    } else if (key == "seed") {
      cfg.seed = detail::parse_unsigned<std::uint64_t>(key, v);
    } else if (key == "shim_url") {
      cfg.shim_url = std::string(v);
    } else if (key == "timeout_s") {
      cfg.timeout_s = detail::parse_double(key, v);
    } else if (key == "fewshot_file") {
      cfg.fewshot_file = std::string(v);
    } else if (key == "synonyms_file") {
      cfg.synonyms_file = std::string(v);
    } else if (key == "mock_fixture_file") {
      cfg.mock_fixture_file = std::string(v);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    }
  }
  return cfg;
}

/// Writes every set key; numbers use shortest round-trip form, so
/// parse_config(save_config(c)) == c.
inline std::string save_config(const PipelineConfig& cfg) {
  std::string out;
  auto put = [&](std::string_view key, const std::string& v) {
    out += key;
    out += '=';
    out += v;
    out += '\n';
  };
  if (cfg.lambda) put("lambda", detail::format_double(*cfg.lambda));
  put("dataset", cfg.dataset);
  put("k", std::to_string(cfg.k));
  put("temperature", detail::format_double(cfg.temperature));
  put("top_p", detail::format_double(cfg.top_p));
  put("dimension", std::to_string(cfg.dimension));
  put("depth", std::to_string(cfg.depth));
  put("beam", std::to_string(cfg.beam));
  put("seed", std::to_string(cfg.seed));
  if (cfg.shim_url) put("shim_url", *cfg.shim_url);
  put("timeout_s", detail::format_double(cfg.timeout_s));
  if (cfg.fewshot_file) put("fewshot_file", *cfg.fewshot_file);
  if (cfg.synonyms_file) put("synonyms_file", *cfg.synonyms_file);
  if (cfg.mock_fixture_file) put("mock_fixture_file", *cfg.mock_fixture_file);
  return out;
}

/// Reads a config file; relative file paths resolve against its directory.
inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg = parse_config(ss.str());
  const auto base = path.parent_path();
  for (auto* p : {&cfg.fewshot_file, &cfg.synonyms_file, &cfg.mock_fixture_file}) {
    if (*p && std::filesystem::path(**p).is_relative()) **p = (base / **p).lexically_normal().string();
  }
  return cfg;
}

/// Explicit path first, then $FINMORAL_CONFIG, else none (defaults).
inline std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return std::filesystem::path(*explicit_path);
  if (const char* env = std::getenv(std::string(kConfigEnv).c_str()); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

}  // namespace finmoral
