#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "finmoral/errors.hpp"
#include "finmoral/normalize.hpp"
#include "finmoral/pipeline.hpp"
#include "finmoral/table.hpp"

namespace finmoral {

struct DatasetRecord {
  std::string id;
  std::string question;
  std::optional<Table> table;
  std::optional<std::string> passage;
  std::vector<std::string> gold_answers;
  std::optional<std::string> trust_answer;
  std::optional<std::string> modality_tag;

  Context context() const { return make_context(table, passage, question); }
  /// Reference for the trustworthiness metric; the first gold when unannotated.
  const std::string& trust_reference() const { return trust_answer ? *trust_answer : gold_answers.front(); }
};

namespace detail {

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key, std::size_t index) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw DatasetError(std::string(key) + " must be a string", index);
  return j[key].get<std::string>();
}

inline std::string answer_text(const nlohmann::json& a, std::size_t index) {
  if (a.is_string()) return a.get<std::string>();
  if (a.is_number()) return a.dump();
  throw DatasetError("gold answers must be strings or numbers", index);
}

}  // namespace detail

inline DatasetRecord record_from_json(const nlohmann::json& j, std::size_t index) {
  if (!j.is_object()) throw DatasetError("not a JSON object", index);
  DatasetRecord r;
  if (j.contains("id")) {
    if (j["id"].is_string()) {
      r.id = j["id"].get<std::string>();
    } else if (j["id"].is_number_integer()) {
      r.id = j["id"].dump();
    } else {
      throw DatasetError("id must be a string or integer", index);
    }
  } else {
    r.id = std::to_string(index);
  }
  auto q = detail::optional_string(j, "question", index);
  if (!q || text::trim(*q).empty()) throw DatasetError("missing question", index);
  r.question = *q;
  if (j.contains("table") && !j["table"].is_null()) {
    try {
      r.table = table_from_json(j["table"]);
    } catch (const Error& e) {
      throw DatasetError(std::string("table: ") + e.what(), index);
    }
  }
  r.passage = detail::optional_string(j, "passage", index);
  if (r.passage && text::trim(*r.passage).empty()) r.passage.reset();
  if (!r.table && !r.passage) throw DatasetError("needs a table or a passage", index);
  if (!j.contains("gold_answers") || !j["gold_answers"].is_array() || j["gold_answers"].empty()) {
    throw DatasetError("gold_answers must be a non-empty list", index);
  }
  for (const auto& a : j["gold_answers"]) r.gold_answers.push_back(detail::answer_text(a, index));
  if (j.contains("trust_answer") && !j["trust_answer"].is_null()) {
    r.trust_answer = detail::answer_text(j["trust_answer"], index);
  }
  r.modality_tag = detail::optional_string(j, "modality_tag", index);
  if (r.modality_tag && *r.modality_tag != "structured" && *r.modality_tag != "symbolic" &&
      *r.modality_tag != "natural") {
    throw DatasetError("unknown modality_tag \"" + *r.modality_tag + "\"", index);
  }
  return r;
}

inline nlohmann::json record_to_json(const DatasetRecord& r) {
  nlohmann::json j{{"id", r.id}, {"question", r.question}, {"gold_answers", r.gold_answers}};
  if (r.table) j["table"] = to_json_value(*r.table);
  if (r.passage) j["passage"] = *r.passage;
  if (r.trust_answer) j["trust_answer"] = *r.trust_answer;
  if (r.modality_tag) j["modality_tag"] = *r.modality_tag;
  return j;
}

/// JSONL, one record per non-blank line. Errors carry the 0-based record index.
inline std::vector<DatasetRecord> parse_dataset(std::string_view content) {
  std::vector<DatasetRecord> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = text::trim(content.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    const std::size_t index = out.size();
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DatasetError("invalid JSON", index);
    out.push_back(record_from_json(j, index));
  }
  return out;
}

inline std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

inline bool exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
  const std::string p = normalize_answer(prediction);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return true;
  }
  return false;
}

/// Mean exact match; an abstention (nullopt) is a miss.
inline double em(const std::vector<std::optional<std::string>>& predictions,
                 const std::vector<DatasetRecord>& records) {
  if (records.empty()) throw EvalError("empty evaluation set");
  if (predictions.size() != records.size()) throw EvalError("prediction and record counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (predictions[i] && exact_match(*predictions[i], records[i].gold_answers)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

/// Share of records whose selected answer matches the trust reference.
inline double tw_accuracy(const std::vector<std::optional<std::string>>& predictions,
                          const std::vector<DatasetRecord>& records) {
  if (records.empty()) throw EvalError("empty evaluation set");
  if (predictions.size() != records.size()) throw EvalError("prediction and record counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (predictions[i] && normalize_answer(*predictions[i]) == normalize_answer(records[i].trust_reference())) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

struct RecordResult {
  std::string id;
  std::optional<std::string> prediction;
  bool em = false;
  bool tw = false;
  AggregationResult aggregation;
  PipelineTimings timings;
  std::vector<std::string> warnings;
};

struct TimingStat {
  std::string row;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
};

struct MetricsReport {
  std::string label = "Full";
  std::size_t n = 0;
  double em = 0.0;
  double tw_acc = 0.0;
  std::vector<TimingStat> timings;
  std::vector<RecordResult> per_record;

  /// Timings are machine-dependent and left out unless asked for, so the
  /// default report is byte-stable across runs.
  nlohmann::json to_json(bool with_timings = false) const {
    nlohmann::json j;
    j["ablation"] = label;
    j["n"] = n;
    j["em"] = em;
    j["tw_acc"] = tw_acc;
    if (with_timings) {
      nlohmann::json t = nlohmann::json::array();
      for (const auto& s : timings) t.push_back({{"module", s.row}, {"mean_ms", s.mean_ms}, {"stddev_ms", s.stddev_ms}});
      j["timings"] = std::move(t);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : per_record) {
      nlohmann::json e;
      e["id"] = r.id;
      e["prediction"] = r.prediction ? nlohmann::json(*r.prediction) : nlohmann::json(nullptr);
      e["em"] = r.em;
      e["tw"] = r.tw;
      const Candidate* c = r.aggregation.answer();
      e["modality"] = c ? nlohmann::json(to_string(c->modality)) : nlohmann::json(nullptr);
      e["candidates"] = r.aggregation.candidates.size();
      e["tie_break"] = r.aggregation.tie_break;
      if (!r.warnings.empty()) e["warnings"] = r.warnings;
      rows.push_back(std::move(e));
    }
    j["per_record"] = std::move(rows);
    return j;
  }
};

inline constexpr std::array<std::string_view, 5> kTimingRows = {"SQL", "NumSolver", "CoT", "Reranker", "Total"};

inline std::vector<TimingStat> timing_stats(const std::vector<PipelineTimings>& samples) {
  std::vector<TimingStat> out;
  for (std::size_t row = 0; row < kTimingRows.size(); ++row) {
    auto pick = [&](const PipelineTimings& t) {
      switch (row) {
        case 0: return t.sql_ms;
        case 1: return t.numsolver_ms;
        case 2: return t.cot_ms;
        case 3: return t.reranker_ms;
        default: return t.total_ms;
      }
    };
    TimingStat s;
    s.row = kTimingRows[row];
    if (!samples.empty()) {
      double sum = 0.0;
      for (const auto& t : samples) sum += pick(t);
      s.mean_ms = sum / static_cast<double>(samples.size());
      double var = 0.0;
      for (const auto& t : samples) var += (pick(t) - s.mean_ms) * (pick(t) - s.mean_ms);
      s.stddev_ms = std::sqrt(var / static_cast<double>(samples.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline unsigned default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Runs the pipeline over every record with `jobs` workers. Results are
/// stored by record position, so the report does not depend on scheduling.
inline MetricsReport run_batch(const std::vector<DatasetRecord>& records, const Pipeline& pipeline,
                               std::string label = "Full", unsigned jobs = 1) {
  if (records.empty()) throw EvalError("empty evaluation set");
  std::vector<RecordResult> results(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const auto& rec = records[i];
      RecordResult& r = results[i];
      r.id = rec.id;
      try {
        auto out = pipeline.run(rec.question, rec.context());
        r.prediction = out.answer();
        r.aggregation = std::move(out.aggregation);
        r.timings = out.timings;
        r.warnings = std::move(out.warnings);
      } catch (const std::exception& e) {
        r.warnings.push_back(e.what());
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(records.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MetricsReport rep;
  rep.label = std::move(label);
  rep.n = records.size();
  std::vector<std::optional<std::string>> preds;
  std::vector<PipelineTimings> times;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = results[i];
    r.em = r.prediction && exact_match(*r.prediction, records[i].gold_answers);
    r.tw = r.prediction && normalize_answer(*r.prediction) == normalize_answer(records[i].trust_reference());
    preds.push_back(r.prediction);
    times.push_back(r.timings);
  }
  rep.em = em(preds, records);
  rep.tw_acc = tw_accuracy(preds, records);
  rep.timings = timing_stats(times);
  rep.per_record = std::move(results);
  return rep;
}

/// The full run followed by one run per named variant, in the given order.
inline std::vector<MetricsReport> ablate(const std::vector<DatasetRecord>& records, const PipelineConfig& cfg,
                                         const std::vector<std::string>& variants, unsigned jobs = 1) {
  std::vector<const AblationVariant*> runs{&ablation_variant("full")};
  for (const auto& v : variants) {
    const AblationVariant* p = &ablation_variant(v);
    if (std::find(runs.begin(), runs.end(), p) == runs.end()) runs.push_back(p);
  }
  std::vector<MetricsReport> out;
  for (const auto* v : runs) {
    const Pipeline pipeline(cfg, v->ablation);
    out.push_back(run_batch(records, pipeline, v->label, jobs));
  }
  return out;
}

}  // namespace finmoral
