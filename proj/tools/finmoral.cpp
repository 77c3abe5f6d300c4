#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "finmoral/finmoral.hpp"

namespace fs = std::filesystem;
using namespace finmoral;

namespace {

constexpr int kExitAbstain = 1;
constexpr int kExitDataset = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInput = 65;
constexpr int kExitConfig = 78;

struct ConfigFlags {
  std::string config;
  std::string tag;
  std::string mock;

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (auto p = resolve_config_path(config.empty() ? std::nullopt : std::optional<std::string>(config))) {
      cfg = load_config(*p);
    }
    if (!tag.empty()) cfg.dataset = text::lower(tag);
    if (!mock.empty()) cfg.mock_fixture_file = mock;
    cfg.validate();
    return cfg;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Config file (default: $FINMORAL_CONFIG)");
    cmd->add_option("--tag", tag, "Dataset tag selecting the default lambda (wtq|ftq)");
    cmd->add_option("--mock", mock, "Scripted generation fixture (overrides config)");
  }
};

struct ContextFlags {
  std::string question;
  std::string table;
  std::optional<std::string> passage;
  std::string passage_file;

  bool any() const { return !table.empty() || passage || !passage_file.empty(); }

  Context load() const {
    std::optional<Table> t;
    if (!table.empty()) t = load_table_file(table);
    std::optional<std::string> p = passage;
    if (!passage_file.empty()) {
      std::ifstream in(passage_file, std::ios::binary);
      if (!in) throw IngestError("cannot open passage file " + passage_file);
      std::ostringstream ss;
      ss << in.rdbuf();
      p = ss.str();
    }
    return make_context(std::move(t), std::move(p), question);
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("-q,--question", question, "Question text")->required();
    cmd->add_option("--table", table, "Table file (.csv or .json)");
    cmd->add_option("--passage", passage, "Passage text");
    cmd->add_option("--passage-file", passage_file, "Passage text file");
  }
};

struct EvalFlags {
  std::string dataset;
  std::vector<std::string> ablate;
  std::string out;
  unsigned jobs = default_jobs();
  bool timings = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", dataset, "JSONL dataset")->required();
    cmd->add_option("--ablate", ablate, "Variants: sql,numsolver,cot,reranker,tables,passages,numbers,schema")
        ->delimiter(',');
    cmd->add_option("--out", out, "Report file, or directory when ablating");
    cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--timings", timings, "Include per-module latency in reports");
  }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string summary(const MetricsReport& r) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << r.label << ": n=" << r.n << " em=" << r.em << " tw_acc=" << r.tw_acc;
  return ss.str();
}

int cmd_answer(const ContextFlags& cf, const ConfigFlags& cfg_flags, bool explain) {
  if (!cf.any()) {
    std::cerr << "answer: give --table, --passage or --passage-file\n";
    return kExitUsage;
  }
  const PipelineConfig cfg = cfg_flags.resolve();
  const Context ctx = cf.load();
  const Pipeline pipeline(cfg);
  const auto out = pipeline.run(cf.question, ctx);
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
  if (out.abstained()) {
    std::cerr << "no module produced a candidate\n";
    if (explain) std::cout << out.aggregation.to_json().dump(2) << '\n';
    return kExitAbstain;
  }
  std::cout << *out.answer() << '\n';
  if (explain) std::cout << out.aggregation.to_json().dump(2) << '\n';
  return 0;
}

int cmd_eval(const EvalFlags& ef, const ConfigFlags& cfg_flags) {
  const PipelineConfig cfg = cfg_flags.resolve();
  std::vector<DatasetRecord> records;
  try {
    records = load_dataset(ef.dataset);
    if (records.empty()) throw DatasetError("empty evaluation set", 0);
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  }
  if (ef.ablate.empty()) {
    const Pipeline pipeline(cfg);
    const auto rep = run_batch(records, pipeline, "Full", ef.jobs);
    const std::string json = rep.to_json(ef.timings).dump(2) + "\n";
    if (ef.out.empty()) {
      std::cout << json;
    } else {
      write_file(ef.out, json);
    }
    std::cerr << summary(rep) << '\n';
    return 0;
  }
  const auto reports = ablate(records, cfg, ef.ablate, ef.jobs);
  nlohmann::json all = nlohmann::json::array();
  for (const auto& rep : reports) {
    std::string stem;
    for (const auto& v : ablation_variants()) {
      if (v.label == rep.label) stem = v.stem;
    }
    if (!ef.out.empty()) write_file(fs::path(ef.out) / (stem + ".json"), rep.to_json(ef.timings).dump(2) + "\n");
    all.push_back(rep.to_json(ef.timings));
    std::cerr << summary(rep) << '\n';
  }
  if (ef.out.empty()) std::cout << all.dump(2) << '\n';
  return 0;
}

int cmd_bench(const std::string& dataset, const ConfigFlags& cfg_flags, int repeat) {
  const PipelineConfig cfg = cfg_flags.resolve();
  std::vector<DatasetRecord> records;
  try {
    records = load_dataset(dataset);
    if (records.empty()) throw DatasetError("empty evaluation set", 0);
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  }
  const Pipeline pipeline(cfg);
  std::vector<PipelineTimings> samples;
  for (int r = 0; r < repeat; ++r) {
    for (const auto& rec : records) samples.push_back(pipeline.run(rec.question, rec.context()).timings);
  }
  std::printf("%-10s %12s %12s\n", "Module", "Mean (ms)", "Std (ms)");
  for (const auto& s : timing_stats(samples)) std::printf("%-10s %12.4f %12.4f\n", s.row.c_str(), s.mean_ms, s.stddev_ms);
  return 0;
}

int cmd_prompt(const ContextFlags& cf, const ConfigFlags& cfg_flags, bool digest_only) {
  if (!cf.any()) {
    std::cerr << "prompt: give --table, --passage or --passage-file\n";
    return kExitUsage;
  }
  PipelineConfig cfg;
  if (auto p = resolve_config_path(cfg_flags.config.empty() ? std::nullopt
                                                            : std::optional<std::string>(cfg_flags.config))) {
    cfg = load_config(*p);
  }
  PromptConfig pc;
  if (cfg.fewshot_file) pc.examples = load_fewshot(*cfg.fewshot_file);
  const std::string prompt = build_prompt(cf.question, cf.load(), pc);
  if (!digest_only) std::cout << prompt << '\n';
  std::cout << prompt_digest(prompt) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal financial table question answering"};
  app.require_subcommand(1);

  ContextFlags answer_ctx;
  ConfigFlags answer_cfg;
  bool explain = false;
  auto* answer = app.add_subcommand("answer", "Answer one question");
  answer_ctx.attach(answer);
  answer_cfg.attach(answer);
  answer->add_flag("--explain", explain, "Print candidate scores as JSON");

  EvalFlags eval_flags;
  ConfigFlags eval_cfg;
  auto* eval = app.add_subcommand("eval", "Evaluate a dataset");
  eval_flags.attach(eval);
  eval_cfg.attach(eval);

  EvalFlags ablate_flags;
  ConfigFlags ablate_cfg;
  auto* ablate_cmd = app.add_subcommand("ablate", "Evaluate with module or input ablations");
  ablate_flags.attach(ablate_cmd);
  ablate_cfg.attach(ablate_cmd);

  std::string bench_dataset;
  ConfigFlags bench_cfg;
  int repeat = 1;
  auto* bench = app.add_subcommand("bench", "Per-module latency");
  bench->add_option("--dataset", bench_dataset, "JSONL dataset")->required();
  bench->add_option("--repeat", repeat, "Passes over the dataset")->check(CLI::PositiveNumber);
  bench_cfg.attach(bench);

  ContextFlags prompt_ctx;
  ConfigFlags prompt_cfg;
  bool digest_only = false;
  auto* prompt = app.add_subcommand("prompt", "Print the generation prompt and its digest");
  prompt_ctx.attach(prompt);
  prompt_cfg.attach(prompt);
  prompt->add_flag("--digest", digest_only, "Print only the digest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*answer) return cmd_answer(answer_ctx, answer_cfg, explain);
    if (*eval) return cmd_eval(eval_flags, eval_cfg);
    if (*ablate_cmd) {
      if (ablate_flags.ablate.empty()) ablate_flags.ablate = {"sql", "numsolver", "cot", "reranker"};
      return cmd_eval(ablate_flags, ablate_cfg);
    }
    if (*bench) return cmd_bench(bench_dataset, bench_cfg, repeat);
    if (*prompt) return cmd_prompt(prompt_ctx, prompt_cfg, digest_only);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  } catch (const finmoral::Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}
