#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmoral/aggregator.hpp"
#include "finmoral/candidate.hpp"
#include "finmoral/config.hpp"
#include "finmoral/context.hpp"
#include "finmoral/cot.hpp"
#include "finmoral/encoder.hpp"
#include "finmoral/numsolver.hpp"
#include "finmoral/query_generator.hpp"
#include "finmoral/shim_client.hpp"

namespace finmoral {

/// Disabled modules and withheld inputs for one run.
struct Ablation {
  bool sql = false;
  bool numsolver = false;
  bool cot = false;
  bool reranker = false;
  bool tables = false;
  bool passages = false;
  bool numbers = false;
  bool schema = false;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct AblationVariant {
  std::string name;   // as given to --ablate
  std::string label;  // report label
  std::string stem;   // output file stem
  Ablation ablation;
};

inline const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> kVariants = [] {
    std::vector<AblationVariant> v;
    auto add = [&](std::string name, std::string label, std::string stem, bool Ablation::*flag) {
      Ablation a;
      if (flag) a.*flag = true;
      v.push_back({std::move(name), std::move(label), std::move(stem), a});
    };
    add("full", "Full", "full", nullptr);
    add("sql", "w/o SQL", "wo_sql", &Ablation::sql);
    add("numsolver", "w/o NumSolver", "wo_numsolver", &Ablation::numsolver);
    add("cot", "w/o CoT", "wo_cot", &Ablation::cot);
    add("reranker", "w/o Reranker", "wo_reranker", &Ablation::reranker);
    add("tables", "w/o Tables", "wo_tables", &Ablation::tables);
    add("passages", "w/o Passages", "wo_passages", &Ablation::passages);
    add("numbers", "w/o Numbers", "wo_numbers", &Ablation::numbers);
    add("schema", "w/o Schema", "wo_schema", &Ablation::schema);
    return v;
  }();
  return kVariants;
}

inline const AblationVariant& ablation_variant(std::string_view name) {
  const std::string key = text::lower(text::trim(name));
  for (const auto& v : ablation_variants()) {
    if (v.name == key) return v;
  }
  throw ConfigError("unknown ablation \"" + std::string(name) + "\"");
}

/// Withholds the ablated inputs. Numbers are re-extracted from what remains.
inline Context apply_input_ablation(Context ctx, const Ablation& ab) {
  bool reextract = false;
  if (ab.tables && ctx.table) {
    ctx.table.reset();
    ctx.schema.reset();
    reextract = true;
  }
  if (ab.passages && ctx.passage) {
    ctx.passage.reset();
    reextract = true;
  }
  if (reextract) ctx.numbers = extract_numbers({}, ctx);
  if (ab.numbers) ctx.numbers.clear();
  if (ab.schema) ctx.schema.reset();
  return ctx;
}

/// Tries `primary` and replays `fallback` when it fails.
class FallbackGenerationClient final : public GenerationClient {
public:
  FallbackGenerationClient(std::shared_ptr<const GenerationClient> primary,
                           std::shared_ptr<const GenerationClient> fallback)
      : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

  std::string generate(const std::string& prompt, const SamplingParams& params, int sample_index) const override {
    try {
      return primary_->generate(prompt, params, sample_index);
    } catch (const std::exception&) {
      return fallback_->generate(prompt, params, sample_index);
    }
  }

private:
  std::shared_ptr<const GenerationClient> primary_;
  std::shared_ptr<const GenerationClient> fallback_;
};

struct Backends {
  std::shared_ptr<const QueryGenerator> baseline_sql;
  std::shared_ptr<const QueryGenerator> sql;
  std::shared_ptr<const GenerationClient> generator;  // null when no backend
  std::shared_ptr<const PairScorer> ranker;           // null means baseline
  std::shared_ptr<const Encoder> encoder;
  Vector weights;
  PromptConfig prompt;
};

/// Baseline SQL generator, mock or shim generation, baseline or shim
/// reranking, seeded hash encoder and weight vector.
inline Backends make_backends(const PipelineConfig& cfg) {
  Backends b;
  SynonymTable syn = SynonymTable::defaults();
  if (cfg.synonyms_file) syn.merge(SynonymTable::load(*cfg.synonyms_file));
  b.baseline_sql = std::make_shared<RuleBasedQueryGenerator>(std::move(syn));
  b.sql = b.baseline_sql;

  std::shared_ptr<const GenerationClient> mock;
  if (cfg.mock_fixture_file) {
    mock = std::make_shared<MockGenerationClient>(MockGenerationClient::load(*cfg.mock_fixture_file));
  }
  b.generator = mock;
  if (cfg.shim_url) {
    const ShimConnection conn(*cfg.shim_url, cfg.timeout_s);
    b.sql = std::make_shared<HttpQueryGenerator>(conn, b.baseline_sql.get());
    std::shared_ptr<const GenerationClient> http = std::make_shared<HttpGenerationClient>(conn);
    b.generator = mock ? std::make_shared<FallbackGenerationClient>(http, mock) : http;
    b.ranker = std::make_shared<HttpPairScorer>(conn);
  }

  b.encoder = std::make_shared<HashEncoder>(cfg.dimension, cfg.seed);
  b.weights = default_weight_vector(cfg.dimension, cfg.seed);

  b.prompt.k = cfg.k;
  b.prompt.temperature = cfg.temperature;
  b.prompt.top_p = cfg.top_p;
  if (cfg.fewshot_file) b.prompt.examples = load_fewshot(*cfg.fewshot_file);
  return b;
}

struct PipelineTimings {
  double sql_ms = 0.0;
  double numsolver_ms = 0.0;
  double cot_ms = 0.0;
  double reranker_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineOutput {
  Candidate structured = Candidate::absent(Modality::sql);
  Candidate symbolic = Candidate::absent(Modality::num);
  CotResult natural;
  AggregationResult aggregation;
  PipelineTimings timings;
  std::vector<std::string> warnings;

  bool abstained() const { return aggregation.abstained(); }
  std::optional<std::string> answer() const {
    if (const Candidate* c = aggregation.answer()) return c->answer;
    return std::nullopt;
  }
};

/// The full answer pipeline: three modules feed one candidate set, which
/// is scored and reduced to a single answer.
class Pipeline {
public:
  Pipeline(PipelineConfig cfg, Ablation ablation = {}) : cfg_(std::move(cfg)), ablation_(ablation) {
    cfg_.validate();
    cfg_.validate_backends(!ablation_.cot);
    backends_ = make_backends(cfg_);
  }

  Pipeline(PipelineConfig cfg, Ablation ablation, Backends backends)
      : cfg_(std::move(cfg)), ablation_(ablation), backends_(std::move(backends)) {
    cfg_.validate();
  }

  const PipelineConfig& config() const { return cfg_; }
  const Ablation& ablation() const { return ablation_; }
  const Backends& backends() const { return backends_; }

  PipelineOutput run(std::string_view question, const Context& full_ctx) const {
    using Clock = std::chrono::steady_clock;
    auto ms = [](Clock::time_point a, Clock::time_point b) {
      return std::chrono::duration<double, std::milli>(b - a).count();
    };
    const Context ctx = apply_input_ablation(full_ctx, ablation_);
    PipelineOutput out;
    const auto start = Clock::now();

    auto t = Clock::now();
    if (!ablation_.sql && backends_.sql) {
      try {
        out.structured = structured_answer(*backends_.sql, question, ctx, &out.warnings);
      } catch (const std::exception& e) {
        out.warnings.push_back(std::string("structured module: ") + e.what());
      }
    }
    out.timings.sql_ms = ms(t, Clock::now());

    t = Clock::now();
    if (!ablation_.numsolver && backends_.encoder) {
      try {
        out.symbolic = symbolic_answer(question, ctx, *backends_.encoder, backends_.weights,
                                       NumSolverOptions{cfg_.depth, cfg_.beam});
      } catch (const std::exception& e) {
        out.warnings.push_back(std::string("symbolic module: ") + e.what());
      }
    }
    out.timings.numsolver_ms = ms(t, Clock::now());

    t = Clock::now();
    if (!ablation_.cot && backends_.generator) {
      out.natural = sample_and_vote(*backends_.generator, question, ctx, backends_.prompt);
      for (const auto& s : out.natural.samples) {
        if (s.failed) out.warnings.push_back("sample " + std::to_string(s.sample_index) + ": " + s.error);
      }
    }
    out.timings.cot_ms = ms(t, Clock::now());

    t = Clock::now();
    auto a = build_candidate_set(out.structured, out.symbolic, out.natural.candidates);
    out.aggregation = aggregate(std::move(a), cfg_.resolved_lambda(), question, ctx, backends_.ranker.get(),
                                !ablation_.reranker);
    if (out.aggregation.degraded) out.warnings.push_back("reranker failed on some pairs; baseline scores used");
    const auto end = Clock::now();
    out.timings.reranker_ms = ms(t, end);
    out.timings.total_ms = ms(start, end);
    return out;
  }

private:
  PipelineConfig cfg_;
  Ablation ablation_;
  Backends backends_;
};

}  // namespace finmoral
