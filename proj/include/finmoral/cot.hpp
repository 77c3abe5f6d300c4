#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "finmoral/candidate.hpp"
#include "finmoral/context.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/text.hpp"

namespace finmoral {

inline constexpr std::string_view kDefaultInstruction =
    "Answer the financial question using step-by-step reasoning. Justify your answer using available context.";

struct FewShotExample {
  std::string question;
  /// Worked answer trace, possibly multi-line.
  std::string answer;

  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

struct PromptConfig {
  std::string instruction{kDefaultInstruction};
  std::vector<FewShotExample> examples;
  int k = 5;
  double temperature = 0.3;
  double top_p = 0.95;

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  }
};

/// Few-shot file: JSON array of {"question", "answer"} objects.
inline std::vector<FewShotExample> parse_fewshot(std::string_view content) {
  const auto j = nlohmann::json::parse(content, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw ConfigError("few-shot file must be a JSON array");
  std::vector<FewShotExample> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("question") || !e.contains("answer") || !e["question"].is_string() ||
        !e["answer"].is_string()) {
      throw ConfigError("few-shot entry " + std::to_string(out.size()) + " needs string question and answer");
    }
    out.push_back({e["question"].get<std::string>(), e["answer"].get<std::string>()});
  }
  return out;
}

inline std::vector<FewShotExample> load_fewshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open few-shot file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_fewshot(ss.str());
}

/// Pipe-separated rows padded to equal code-point width per column, with a
/// dashed rule under the header.
inline std::string render_table(const Table& t) {
  std::vector<std::size_t> width(t.column_count(), 0);
  for (std::size_t j = 0; j < t.column_count(); ++j) {
    width[j] = std::max<std::size_t>(text::display_width(t.headers[j]), 3);
    for (const auto& row : t.rows) width[j] = std::max(width[j], text::display_width(text::trim(row[j].surface)));
  }
  std::string out;
  auto line = [&](auto cell) {
    out += '|';
    for (std::size_t j = 0; j < width.size(); ++j) {
      const std::string s = cell(j);
      out += ' ';
      out += s;
      out.append(width[j] - text::display_width(s), ' ');
      out += " |";
    }
    out += '\n';
  };
  line([&](std::size_t j) { return t.headers[j]; });
  line([&](std::size_t j) { return std::string(width[j], '-'); });
  for (const auto& row : t.rows) line([&](std::size_t j) { return std::string(text::trim(row[j].surface)); });
  return out;
}

inline std::string build_prompt(std::string_view question, const Context& ctx, const PromptConfig& cfg) {
  std::string p;
  p += "Instruction: " + cfg.instruction + "\n\n";
  p += "Question: " + std::string(text::trim(question)) + "\n\n";
  p += "Context (Passage & Table Snippets):\n";
  if (ctx.passage) p += std::string(text::trim(*ctx.passage)) + "\n";
  if (ctx.passage && ctx.table) p += "\n";
  if (ctx.table) p += render_table(*ctx.table);
  if (!cfg.examples.empty()) {
    p += "\nFew-shot Examples:\n";
    for (std::size_t i = 0; i < cfg.examples.size(); ++i) {
      if (i > 0) p += "\n";
      p += "Q: " + cfg.examples[i].question + "\n";
      p += "A: " + cfg.examples[i].answer + "\n";
    }
  }
  p += "\nAnswer:";
  return p;
}

inline std::string prompt_digest(std::string_view prompt) { return text::hex64(text::fnv1a64(prompt)); }

/// Text after the last "Final Answer:" (any case) up to end of line, or the
/// last non-empty line when there is no anchor. Trailing periods dropped.
inline std::optional<std::string> extract_answer(std::string_view generated) {
  const std::string lowered = text::lower(generated);
  constexpr std::string_view kAnchor = "final answer:";
  std::string_view tail;
  if (const auto pos = lowered.rfind(kAnchor); pos != std::string::npos) {
    tail = generated.substr(pos + kAnchor.size());
    tail = tail.substr(0, tail.find_first_of("\r\n"));
  } else {
    std::size_t end = generated.size();
    while (end > 0) {
      const std::size_t nl = generated.find_last_of('\n', end - 1);
      const std::size_t begin = nl == std::string_view::npos ? 0 : nl + 1;
      auto candidate = text::trim(generated.substr(begin, end - begin));
      if (!candidate.empty()) {
        tail = candidate;
        break;
      }
      if (nl == std::string_view::npos) break;
      end = nl;
    }
  }
  tail = text::trim(tail);
  while (!tail.empty() && tail.back() == '.') tail = text::trim(tail.substr(0, tail.size() - 1));
  if (tail.empty()) return std::nullopt;
  return std::string(tail);
}

struct SamplingParams {
  double temperature = 0.3;
  double top_p = 0.95;
};

/// Text generation backend. Implementations throw ClientError on failure
/// and must tolerate concurrent calls.
class GenerationClient {
public:
  virtual ~GenerationClient() = default;
  virtual std::string generate(const std::string& prompt, const SamplingParams& params, int sample_index) const = 0;
};

/// Replays scripted responses keyed by prompt digest. A "default" entry
/// serves prompts without their own script.
class MockGenerationClient final : public GenerationClient {
public:
  MockGenerationClient() = default;
  explicit MockGenerationClient(std::map<std::string, std::vector<std::string>> scripts)
      : scripts_(std::move(scripts)) {}

  static MockGenerationClient parse(std::string_view content) {
    const auto j = nlohmann::json::parse(content, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("mock fixture must be a JSON object");
    std::map<std::string, std::vector<std::string>> scripts;
    for (const auto& [key, list] : j.items()) {
      if (!list.is_array()) throw ConfigError("mock fixture entry \"" + key + "\" must be an array");
      auto& out = scripts[key];
      for (const auto& s : list) {
        if (!s.is_string()) throw ConfigError("mock fixture entry \"" + key + "\" must hold strings");
        out.push_back(s.get<std::string>());
      }
    }
    return MockGenerationClient(std::move(scripts));
  }

  static MockGenerationClient load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mock fixture " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  std::string generate(const std::string& prompt, const SamplingParams&, int sample_index) const override {
    auto it = scripts_.find(prompt_digest(prompt));
    if (it == scripts_.end()) it = scripts_.find("default");
    if (it == scripts_.end()) throw ClientError("no scripted response for prompt " + prompt_digest(prompt));
    if (sample_index < 1 || static_cast<std::size_t>(sample_index) > it->second.size()) {
      throw ClientError("no scripted response for sample " + std::to_string(sample_index));
    }
    return it->second[static_cast<std::size_t>(sample_index) - 1];
  }

private:
  std::map<std::string, std::vector<std::string>> scripts_;
};

struct CotSample {
  int sample_index = 0;
  std::string rationale;
  std::optional<std::string> answer;
  bool failed = false;
  std::string error;
};

/// Position of the voted answer: the most frequent string, ties going to
/// the earliest position. Empty input yields nullopt.
inline std::optional<std::size_t> majority_vote(const std::vector<std::string>& normalized) {
  std::optional<std::size_t> best;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const auto count = static_cast<std::size_t>(std::count(normalized.begin(), normalized.end(), normalized[i]));
    if (count > best_count) {
      best = i;
      best_count = count;
    }
  }
  return best;
}

namespace detail {

/// "Step 3:" style labels are numbering, not quantities.
inline bool is_step_label(std::string_view s, std::size_t begin) {
  auto before = s.substr(0, begin);
  while (!before.empty() && text::is_space(before.back())) before.remove_suffix(1);
  if (before.size() < 4) return false;
  if (!text::iequals(before.substr(before.size() - 4), "step")) return false;
  return before.size() == 4 || !text::is_word_byte(before[before.size() - 5]);
}

inline bool derivable(const Decimal& x, const std::vector<Decimal>& pool) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i] == x) return true;
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (i == j) continue;
      const Decimal& a = pool[i];
      const Decimal& b = pool[j];
      if (a + b == x || a - b == x || a * b == x) return true;
      if (!b.is_zero() && (a / b == x || (a - b) / b == x)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Share of the rationale's numbers that occur in the context or follow
/// from two context numbers by one of + - * / or percent change. Numbers
/// compare as exact values after unit expansion; 1.0 when there are none.
inline double number_alignment(std::string_view rationale, const Context& ctx) {
  std::vector<Decimal> pool;
  pool.reserve(ctx.numbers.size());
  for (const auto& m : ctx.numbers) pool.push_back(m.value.number);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::size_t total = 0;
  std::size_t aligned = 0;
  for (const auto& m : scan_numbers(rationale, Source::rationale)) {
    if (detail::is_step_label(rationale, m.where.begin)) continue;
    ++total;
    if (detail::derivable(m.value.number, pool)) ++aligned;
  }
  if (total == 0) return 1.0;
  return static_cast<double>(aligned) / static_cast<double>(total);
}

struct CotResult {
  std::vector<CotSample> samples;
  /// One present candidate per sample with an extracted answer, in
  /// sample order. These enter the candidate set.
  std::vector<Candidate> candidates;
  /// Majority answer, for diagnostics only.
  Candidate voted = Candidate::absent(Modality::cot);
};

/// Draws k samples (sample_index 1..k), extracts answers and votes over
/// their normalized forms. Failed samples are dropped.
inline CotResult sample_and_vote(const GenerationClient& client, std::string_view question, const Context& ctx,
                                 const PromptConfig& cfg) {
  cfg.validate();
  const std::string prompt = build_prompt(question, ctx, cfg);
  const SamplingParams params{cfg.temperature, cfg.top_p};
  CotResult r;
  for (int i = 1; i <= cfg.k; ++i) {
    CotSample s;
    s.sample_index = i;
    try {
      s.rationale = client.generate(prompt, params, i);
      s.answer = extract_answer(s.rationale);
    } catch (const std::exception& e) {
      s.failed = true;
      s.error = e.what();
    }
    if (s.answer) {
      Candidate c = Candidate::make(Modality::cot, *s.answer, number_alignment(s.rationale, ctx), i);
      c.rationale = s.rationale;
      r.candidates.push_back(std::move(c));
    }
    r.samples.push_back(std::move(s));
  }
  std::vector<std::string> normalized;
  for (const auto& c : r.candidates) normalized.push_back(c.normalized);
  if (auto w = majority_vote(normalized)) r.voted = r.candidates[*w];
  return r;
}

}  // namespace finmoral
