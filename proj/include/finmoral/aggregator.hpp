#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "finmoral/candidate.hpp"
#include "finmoral/context.hpp"
#include "finmoral/errors.hpp"

namespace finmoral {

/// Candidate set in fixed order: sql, num, then cot samples. Absent
/// candidates are dropped.
inline std::vector<Candidate> build_candidate_set(const Candidate& structured, const Candidate& symbolic,
                                                  const std::vector<Candidate>& cot_samples) {
  std::vector<Candidate> a;
  if (structured.present) a.push_back(structured);
  if (symbolic.present) a.push_back(symbolic);
  for (const auto& c : cot_samples) {
    if (c.present) a.push_back(c);
  }
  return a;
}

/// C(a_i) = share of candidates with the same normalized answer + lambda * H(a_i).
inline std::vector<double> consistency_scores(const std::vector<Candidate>& a, double lambda) {
  if (a.empty()) throw Error("empty candidate set");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  std::vector<double> c;
  c.reserve(a.size());
  const double n = static_cast<double>(a.size());
  for (const auto& x : a) {
    std::size_t same = 0;
    for (const auto& y : a) same += x.normalized == y.normalized ? 1 : 0;
    c.push_back(static_cast<double>(same) / n + lambda * x.heuristic);
  }
  return c;
}

/// Preference of a over b given the question and context; larger means a
/// is the better answer. Implementations throw on failure.
class PairScorer {
public:
  virtual ~PairScorer() = default;
  virtual double score(std::string_view question, const Context& ctx, const Candidate& a,
                       const Candidate& b) const = 0;
};

/// sigma(a, b) = C(a) - C(b). Candidates are identified by modality and
/// sample index.
class BaselinePairScorer final : public PairScorer {
public:
  BaselinePairScorer(const std::vector<Candidate>& a, const std::vector<double>& c) : a_(a), c_(c) {
    if (a.size() != c.size()) throw DimensionError("candidate and consistency counts differ");
  }

  double score(std::string_view, const Context&, const Candidate& a, const Candidate& b) const override {
    return lookup(a) - lookup(b);
  }

private:
  double lookup(const Candidate& x) const {
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (a_[i].modality == x.modality && a_[i].sample_index == x.sample_index) return c_[i];
    }
    throw Error("candidate not in set");
  }

  std::vector<Candidate> a_;
  std::vector<double> c_;
};

struct PairMatrix {
  std::vector<std::vector<double>> sigma;
  /// Some pair fell back to the baseline scorer.
  bool degraded = false;
};

/// sigma_ij = scorer(a_i, a_j) for i != j, zero diagonal. A failing or
/// non-finite pair uses the fallback scorer instead.
inline PairMatrix pair_scores(const PairScorer& scorer, const PairScorer& fallback, std::string_view question,
                              const Context& ctx, const std::vector<Candidate>& a) {
  PairMatrix m;
  m.sigma.assign(a.size(), std::vector<double>(a.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (i == j) continue;
      std::optional<double> s;
      try {
        s = scorer.score(question, ctx, a[i], a[j]);
        if (!std::isfinite(*s)) s.reset();
      } catch (const std::exception&) {
        s.reset();
      }
      if (!s) {
        m.degraded = true;
        s = fallback.score(question, ctx, a[i], a[j]);
      }
      m.sigma[i][j] = *s;
    }
  }
  return m;
}

/// Row sums of sigma without the diagonal.
inline std::vector<double> total_scores(const std::vector<std::vector<double>>& sigma) {
  std::vector<double> s(sigma.size(), 0.0);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i].size() != sigma.size()) throw DimensionError("pair score matrix is not square");
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      if (j != i) s[i] += sigma[i][j];
    }
  }
  return s;
}

struct Selection {
  std::optional<std::size_t> index;
  /// Which rules decided, e.g. "score" or "score>consistency>modality".
  std::string tie_break;
};

/// argmax score; ties go to higher consistency, then modality priority
/// (sql, num, cot), then lower sample index, then earlier position.
inline Selection select(const std::vector<Candidate>& a, const std::vector<double>& score,
                        const std::vector<double>& consistency) {
  Selection sel;
  if (a.empty()) {
    sel.tie_break = "abstain";
    return sel;
  }
  if (score.size() != a.size() || consistency.size() != a.size()) {
    throw DimensionError("score vectors do not match candidate count");
  }
  std::vector<std::size_t> pool(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) pool[i] = i;

  auto keep_best = [&](auto better, auto same) {
    std::size_t best = pool.front();
    for (std::size_t i : pool) {
      if (better(i, best)) best = i;
    }
    std::vector<std::size_t> next;
    for (std::size_t i : pool) {
      if (same(i, best)) next.push_back(i);
    }
    pool = std::move(next);
  };

  sel.tie_break = "score";
  keep_best([&](std::size_t i, std::size_t b) { return score[i] > score[b]; },
            [&](std::size_t i, std::size_t b) { return score[i] == score[b]; });
  if (pool.size() > 1) {
    sel.tie_break += ">consistency";
    keep_best([&](std::size_t i, std::size_t b) { return consistency[i] > consistency[b]; },
              [&](std::size_t i, std::size_t b) { return consistency[i] == consistency[b]; });
  }
  if (pool.size() > 1) {
    sel.tie_break += ">modality";
    keep_best([&](std::size_t i, std::size_t b) { return priority(a[i].modality) < priority(a[b].modality); },
              [&](std::size_t i, std::size_t b) { return a[i].modality == a[b].modality; });
  }
  if (pool.size() > 1) {
    sel.tie_break += ">sample_index";
    keep_best([&](std::size_t i, std::size_t b) { return a[i].sample_index < a[b].sample_index; },
              [&](std::size_t i, std::size_t b) { return a[i].sample_index == a[b].sample_index; });
  }
  if (pool.size() > 1) sel.tie_break += ">position";
  sel.index = pool.front();
  return sel;
}

struct AggregationResult {
  std::vector<Candidate> candidates;
  std::vector<double> consistency;
  std::vector<std::vector<double>> sigma;
  std::vector<double> totals;
  std::optional<std::size_t> selected;
  std::string tie_break;
  bool degraded = false;
  bool reranked = true;
  double lambda = 0.0;

  bool abstained() const { return !selected.has_value(); }
  const Candidate* answer() const { return selected ? &candidates[*selected] : nullptr; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : candidates) {
      nlohmann::json e{{"answer", c.answer},         {"normalized", c.normalized}, {"modality", to_string(c.modality)},
                       {"sample_index", c.sample_index}, {"H", c.heuristic}};
      if (!c.trace.empty()) e["trace"] = c.trace;
      if (c.rationale) e["rationale"] = *c.rationale;
      j["candidates"].push_back(std::move(e));
    }
    j["consistency"] = consistency;
    j["sigma"] = sigma;
    j["totals"] = totals;
    j["selected"] = selected ? nlohmann::json(*selected) : nlohmann::json(nullptr);
    j["answer"] = selected ? nlohmann::json(candidates[*selected].answer) : nlohmann::json(nullptr);
    j["tie_break"] = tie_break;
    j["degraded"] = degraded;
    j["reranked"] = reranked;
    j["lambda"] = lambda;
    return j;
  }
};

/// Consistency, pair scores, totals and selection over a built candidate
/// set. A null scorer means the baseline. With rerank off, selection is
/// argmax C under the same tie rules.
inline AggregationResult aggregate(std::vector<Candidate> a, double lambda, std::string_view question,
                                   const Context& ctx, const PairScorer* scorer = nullptr, bool rerank = true) {
  AggregationResult r;
  r.lambda = lambda;
  r.reranked = rerank;
  r.candidates = std::move(a);
  if (r.candidates.empty()) {
    r.tie_break = "abstain";
    return r;
  }
  r.consistency = consistency_scores(r.candidates, lambda);
  if (!rerank) {
    const auto sel = select(r.candidates, r.consistency, r.consistency);
    r.selected = sel.index;
    r.tie_break = sel.tie_break;
    return r;
  }
  const BaselinePairScorer baseline(r.candidates, r.consistency);
  if (r.candidates.size() == 1) {
    r.sigma = {{0.0}};
  } else {
    auto m = pair_scores(scorer ? *scorer : baseline, baseline, question, ctx, r.candidates);
    r.sigma = std::move(m.sigma);
    r.degraded = m.degraded;
  }
  r.totals = total_scores(r.sigma);
  const auto sel = select(r.candidates, r.totals, r.consistency);
  r.selected = sel.index;
  r.tie_break = sel.tie_break;
  return r;
}

}  // namespace finmoral
