#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "finmoral/aggregator.hpp"
#include "finmoral/cot.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/query_generator.hpp"
#include "finmoral/sql.hpp"

namespace finmoral {

inline constexpr double kDefaultTimeoutSeconds = 30.0;
/// Cross-encoder input budget, in whitespace tokens.
inline constexpr std::size_t kRankContextTokens = 384;

/// JSON-over-HTTP connection to the model service. Every call builds its
/// own client, so one instance is safe to share across threads.
class ShimConnection {
public:
  explicit ShimConnection(std::string base_url, double timeout_s = kDefaultTimeoutSeconds)
      : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (base_url_.empty()) throw ConfigError("empty shim URL");
    if (!(timeout_s_ > 0.0)) throw ConfigError("timeout must be positive");
  }

  const std::string& base_url() const { return base_url_; }
  double timeout() const { return timeout_s_; }

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    auto cli = client();
    auto res = cli->Post(path, body.dump(), "application/json");
    return decode(path, res);
  }

  nlohmann::json get(const std::string& path) const {
    auto cli = client();
    auto res = cli->Get(path);
    return decode(path, res);
  }

private:
  std::unique_ptr<httplib::Client> client() const {
    auto cli = std::make_unique<httplib::Client>(base_url_);
    const auto us = std::chrono::microseconds(static_cast<long long>(timeout_s_ * 1e6));
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(us);
    const auto rest = std::chrono::duration_cast<std::chrono::microseconds>(us - sec);
    cli->set_connection_timeout(sec.count(), rest.count());
    cli->set_read_timeout(sec.count(), rest.count());
    cli->set_write_timeout(sec.count(), rest.count());
    return cli;
  }

  static nlohmann::json decode(const std::string& path, const httplib::Result& res) {
    if (!res) throw ClientError(path + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw ClientError(path + ": HTTP " + std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw ClientError(path + ": response is not JSON");
    return j;
  }

  std::string base_url_;
  double timeout_s_;
};

/// /healthz payload, or nullopt when the service is unreachable.
inline std::optional<nlohmann::json> shim_health(const ShimConnection& conn) {
  try {
    return conn.get("/healthz");
  } catch (const ClientError&) {
    return std::nullopt;
  }
}

/// One /v1/generate request with k = 1 per sample.
class HttpGenerationClient final : public GenerationClient {
public:
  explicit HttpGenerationClient(ShimConnection conn) : conn_(std::move(conn)) {}

  std::string generate(const std::string& prompt, const SamplingParams& params, int) const override {
    const nlohmann::json req{{"prompt", prompt}, {"k", 1}, {"temperature", params.temperature}, {"top_p", params.top_p}};
    const auto res = conn_.post("/v1/generate", req);
    if (!res.is_object() || !res.contains("samples") || !res["samples"].is_array() || res["samples"].empty()) {
      throw ClientError("/v1/generate: missing samples");
    }
    const auto& s = res["samples"][0];
    if (!s.is_object() || !s.contains("text") || !s["text"].is_string()) {
      throw ClientError("/v1/generate: sample without text");
    }
    return s["text"].get<std::string>();
  }

private:
  ShimConnection conn_;
};

/// Passage, then the rendered table, cut to the first `max_tokens`
/// whitespace-separated tokens.
inline std::string linearize_context(const Context& ctx, std::size_t max_tokens = kRankContextTokens) {
  std::string full;
  if (ctx.passage) full += std::string(text::trim(*ctx.passage));
  if (ctx.table) {
    if (!full.empty()) full += '\n';
    full += render_table(*ctx.table);
  }
  std::size_t tokens = 0;
  std::size_t i = 0;
  while (i < full.size()) {
    while (i < full.size() && text::is_space(full[i])) ++i;
    if (i >= full.size()) break;
    if (tokens == max_tokens) return std::string(text::trim(std::string_view(full).substr(0, i)));
    ++tokens;
    while (i < full.size() && !text::is_space(full[i])) ++i;
  }
  return std::string(text::trim(full));
}

class HttpPairScorer final : public PairScorer {
public:
  explicit HttpPairScorer(ShimConnection conn) : conn_(std::move(conn)) {}

  double score(std::string_view question, const Context& ctx, const Candidate& a, const Candidate& b) const override {
    const nlohmann::json req{{"question", std::string(question)},
                             {"context_text", linearize_context(ctx)},
                             {"answer_a", a.answer},
                             {"answer_b", b.answer}};
    const auto res = conn_.post("/v1/rank", req);
    if (!res.is_object() || !res.contains("score") || !res["score"].is_number()) {
      throw ClientError("/v1/rank: missing score");
    }
    return res["score"].get<double>();
  }

private:
  ShimConnection conn_;
};

inline constexpr std::size_t kSqlgenSampleRows = 3;

/// Neural SQL generation through /v1/sqlgen. Queries that do not parse are
/// skipped; a transport failure falls back to `fallback` when given.
class HttpQueryGenerator final : public QueryGenerator {
public:
  explicit HttpQueryGenerator(ShimConnection conn, const QueryGenerator* fallback = nullptr)
      : conn_(std::move(conn)), fallback_(fallback) {}

  std::vector<sql::SqlQuery> generate(std::string_view question, const Table& table,
                                      const Schema* schema) const override {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < table.rows.size() && i < kSqlgenSampleRows; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& cell : table.rows[i]) row.push_back(cell.surface);
      rows.push_back(std::move(row));
    }
    const nlohmann::json req{{"question", std::string(question)}, {"headers", table.headers}, {"sample_rows", rows}};
    nlohmann::json res;
    try {
      res = conn_.post("/v1/sqlgen", req);
      if (!res.is_object() || !res.contains("queries") || !res["queries"].is_array()) {
        throw ClientError("/v1/sqlgen: missing queries");
      }
    } catch (const ClientError&) {
      if (fallback_) return fallback_->generate(question, table, schema);
      throw;
    }
    std::vector<sql::SqlQuery> out;
    for (const auto& q : res["queries"]) {
      if (!q.is_string()) continue;
      try {
        out.push_back(sql::parse_sql(q.get<std::string>()));
      } catch (const SqlSyntaxError&) {
      }
    }
    return out;
  }

private:
  ShimConnection conn_;
  const QueryGenerator* fallback_;
};

}  // namespace finmoral
