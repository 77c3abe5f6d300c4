#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finmoral/candidate.hpp"
#include "finmoral/context.hpp"
#include "finmoral/encoder.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/query_generator.hpp"

namespace finmoral {

enum class OpKind { add, sub, mul, div, pct_change, ratio };

inline constexpr std::array<OpKind, 6> kAllOps = {OpKind::add, OpKind::sub, OpKind::mul,
                                                  OpKind::div, OpKind::pct_change, OpKind::ratio};

inline std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::pct_change: return "pct_change";
    case OpKind::ratio: return "ratio";
  }
  return "add";
}

/// Binary arithmetic tree whose leaves index into the context number list.
/// Immutable; subtrees are shared.
class ExpressionTree {
public:
  static ExpressionTree leaf(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->index = index;
    return ExpressionTree(std::move(n));
  }

  static ExpressionTree apply(OpKind op, ExpressionTree lhs, ExpressionTree rhs) {
    auto n = std::make_shared<Node>();
    n->is_leaf = false;
    n->op = op;
    n->depth = 1 + std::max(lhs.depth(), rhs.depth());
    n->size = 1 + lhs.node_count() + rhs.node_count();
    n->left = std::move(lhs.node_);
    n->right = std::move(rhs.node_);
    return ExpressionTree(std::move(n));
  }

  bool is_leaf() const { return node_->is_leaf; }
  std::size_t leaf_index() const { return node_->index; }
  OpKind op() const { return node_->op; }
  ExpressionTree left() const { return ExpressionTree(node_->left); }
  ExpressionTree right() const { return ExpressionTree(node_->right); }
  /// Operator nesting; a leaf has depth 0.
  std::size_t depth() const { return node_->depth; }
  std::size_t node_count() const { return node_->size; }

  /// Canonical form, e.g. `pct_change(num[0], num[1])`.
  std::string render() const {
    if (is_leaf()) return "num[" + std::to_string(leaf_index()) + "]";
    return std::string(to_string(op())) + "(" + left().render() + ", " + right().render() + ")";
  }

  void collect_ops(std::vector<OpKind>& out) const {
    if (is_leaf()) return;
    out.push_back(op());
    left().collect_ops(out);
    right().collect_ops(out);
  }

  void collect_leaves(std::vector<std::size_t>& out) const {
    if (is_leaf()) {
      out.push_back(leaf_index());
      return;
    }
    left().collect_leaves(out);
    right().collect_leaves(out);
  }

private:
  struct Node {
    bool is_leaf = true;
    std::size_t index = 0;
    OpKind op = OpKind::add;
    std::size_t depth = 0;
    std::size_t size = 1;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
  };

  explicit ExpressionTree(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

struct ExpressionScore {
  Vector pooled;
  double scalar = 0.0;
  /// Attention weights, one per node, in canonical node order.
  std::vector<double> alpha;
};

namespace detail {

/// Node texts in canonical order: leaves embed their number's surface
/// string, operators their name. Sorting makes the score a function of the
/// node multiset, so mirrored trees score bit-identically.
inline std::vector<std::string> node_texts(const ExpressionTree& tree, std::span<const NumberMention> numbers) {
  std::vector<std::string> out;
  std::vector<std::size_t> leaves;
  tree.collect_leaves(leaves);
  for (std::size_t i : leaves) {
    if (i >= numbers.size()) throw EvalError("leaf references number " + std::to_string(i) + " of " + std::to_string(numbers.size()));
    out.push_back(numbers[i].value.surface);
  }
  std::vector<OpKind> ops;
  tree.collect_ops(ops);
  for (OpKind op : ops) out.emplace_back(to_string(op));
  std::sort(out.begin(), out.end());
  return out;
}

inline ExpressionScore pool(const std::vector<const Vector*>& phi, std::span<const double> w) {
  std::vector<double> logits;
  logits.reserve(phi.size());
  for (const Vector* v : phi) logits.push_back(dot(w, *v));
  const double top = *std::max_element(logits.begin(), logits.end());
  ExpressionScore s;
  s.alpha.reserve(phi.size());
  double z = 0.0;
  for (double l : logits) {
    s.alpha.push_back(std::exp(l - top));
    z += s.alpha.back();
  }
  for (double& a : s.alpha) a /= z;
  s.pooled.assign(w.size(), 0.0);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    for (std::size_t k = 0; k < w.size(); ++k) s.pooled[k] += s.alpha[n] * (*phi[n])[k];
  }
  s.scalar = dot(w, s.pooled);
  return s;
}

}  // namespace detail

/// Attention-pooled tree embedding: alpha = softmax(w . phi(n)) over all
/// leaf and operator nodes, pooled = sum alpha_n phi(n), scalar = w . pooled.
inline ExpressionScore score_expression(const ExpressionTree& tree, std::span<const NumberMention> numbers,
                                        const Encoder& enc, std::span<const double> w) {
  if (w.size() != enc.dimension()) {
    throw DimensionError("weight length " + std::to_string(w.size()) + " != encoder dimension " +
                         std::to_string(enc.dimension()));
  }
  const auto texts = detail::node_texts(tree, numbers);
  std::vector<Vector> phi;
  phi.reserve(texts.size());
  for (const auto& t : texts) phi.push_back(enc.encode(t));
  std::vector<const Vector*> refs;
  for (const auto& v : phi) refs.push_back(&v);
  return detail::pool(refs, w);
}

/// Memoizing scorer for enumeration; same arithmetic as score_expression.
class TreeScorer {
public:
  TreeScorer(const Encoder& enc, std::span<const double> w, std::span<const NumberMention> numbers)
      : enc_(enc), w_(w.begin(), w.end()), numbers_(numbers) {
    if (w.size() != enc.dimension()) throw DimensionError("weight length does not match encoder dimension");
  }

  double scalar(const ExpressionTree& tree) const {
    const auto texts = detail::node_texts(tree, numbers_);
    std::vector<const Vector*> refs;
    refs.reserve(texts.size());
    for (const auto& t : texts) refs.push_back(&embedding(t));
    return detail::pool(refs, w_).scalar;
  }

private:
  const Vector& embedding(const std::string& t) const {
    auto it = cache_.find(t);
    if (it == cache_.end()) it = cache_.emplace(t, enc_.encode(t)).first;
    return it->second;
  }

  const Encoder& enc_;
  Vector w_;
  std::span<const NumberMention> numbers_;
  mutable std::map<std::string, Vector> cache_;
};

/// Operator kinds licensed by question keywords.
inline std::vector<OpKind> licensed_ops(std::string_view question) {
  const auto tokens = text::tokenize(question);
  auto has_any = [&](std::initializer_list<std::string_view> words) {
    for (const auto& t : tokens) {
      for (auto w : words) {
        if (t == w) return true;
      }
    }
    return false;
  };
  std::vector<OpKind> ops;
  if (has_any({"total", "sum", "combined", "plus"})) ops.push_back(OpKind::add);
  if (has_any({"difference", "minus"})) ops.push_back(OpKind::sub);
  if (has_any({"product", "times"})) ops.push_back(OpKind::mul);
  if (has_any({"per", "ratio"})) {
    ops.push_back(OpKind::div);
    ops.push_back(OpKind::ratio);
  }
  if (has_any({"growth", "grow", "grew", "change", "changed", "changes", "yoy"})) ops.push_back(OpKind::pct_change);
  return ops;
}

/// Candidate operand sets. Depth-1 trees pair numbers from the same group
/// only, so quantities on different scales are not mixed.
struct OperandPlan {
  std::vector<std::vector<std::size_t>> groups;

  static OperandPlan single(std::size_t n) {
    OperandPlan p;
    p.groups.emplace_back();
    for (std::size_t i = 0; i < n; ++i) p.groups.back().push_back(i);
    return p;
  }

  std::vector<std::size_t> all() const {
    std::set<std::size_t> s;
    for (const auto& g : groups) s.insert(g.begin(), g.end());
    return {s.begin(), s.end()};
  }
};

struct NumSolverOptions {
  std::size_t max_depth = 3;
  std::size_t beam = 5;
};

namespace detail {

/// ratio and div are one cue and may appear at most once between them.
inline int op_group(OpKind op) { return op == OpKind::ratio ? static_cast<int>(OpKind::div) : static_cast<int>(op); }

inline std::set<int> op_groups(const ExpressionTree& t) {
  std::vector<OpKind> ops;
  t.collect_ops(ops);
  std::set<int> out;
  for (OpKind op : ops) out.insert(op_group(op));
  return out;
}

struct Ranked {
  ExpressionTree tree;
  double scalar;
  std::string key;
};

inline bool better(const Ranked& a, const Ranked& b) {
  if (a.scalar != b.scalar) return a.scalar > b.scalar;
  if (a.tree.depth() != b.tree.depth()) return a.tree.depth() < b.tree.depth();
  return a.key < b.key;
}

}  // namespace detail

/// Enumerates expression trees over the question's licensed operators.
///
/// Without an operator keyword only leaf trees are produced. Otherwise every
/// depth-1 tree over ordered operand pairs within a plan group is kept, and
/// deeper levels (up to max_depth) keep the top `beam` trees by scalar
/// score. Each operator kind appears at most once per tree.
inline std::vector<ExpressionTree> enumerate_trees(std::string_view question, std::span<const NumberMention> numbers,
                                                   const NumSolverOptions& opts, const Encoder& enc,
                                                   std::span<const double> w, const OperandPlan* plan = nullptr) {
  if (numbers.empty()) return {};
  const OperandPlan fallback = OperandPlan::single(numbers.size());
  const OperandPlan& p = plan ? *plan : fallback;
  const auto operands = p.all();
  const auto ops = licensed_ops(question);
  std::vector<ExpressionTree> out;
  if (ops.empty() || opts.max_depth == 0) {
    for (std::size_t i : operands) out.push_back(ExpressionTree::leaf(i));
    return out;
  }

  std::set<std::string> seen;
  std::vector<ExpressionTree> level;
  for (const auto& group : p.groups) {
    for (std::size_t i : group) {
      for (std::size_t j : group) {
        if (i == j) continue;
        for (OpKind op : ops) {
          auto t = ExpressionTree::apply(op, ExpressionTree::leaf(i), ExpressionTree::leaf(j));
          if (seen.insert(t.render()).second) level.push_back(std::move(t));
        }
      }
    }
  }
  out = level;

  const TreeScorer scorer(enc, w, numbers);
  std::vector<ExpressionTree> shallower;
  for (std::size_t i : operands) shallower.push_back(ExpressionTree::leaf(i));
  for (std::size_t depth = 2; depth <= opts.max_depth && !level.empty(); ++depth) {
    shallower.insert(shallower.end(), level.begin(), level.end());
    std::vector<detail::Ranked> next;
    for (const auto& t : level) {
      const auto t_groups = detail::op_groups(t);
      for (const auto& u : shallower) {
        const auto u_groups = detail::op_groups(u);
        bool disjoint = true;
        for (int g : u_groups) disjoint = disjoint && !t_groups.count(g);
        if (!disjoint) continue;
        for (OpKind op : ops) {
          const int g = detail::op_group(op);
          if (t_groups.count(g) || u_groups.count(g)) continue;
          for (auto cand : {ExpressionTree::apply(op, t, u), ExpressionTree::apply(op, u, t)}) {
            std::string key = cand.render();
            if (!seen.insert(key).second) continue;
            const double s = scorer.scalar(cand);
            next.push_back({std::move(cand), s, std::move(key)});
          }
        }
      }
    }
    std::sort(next.begin(), next.end(), detail::better);
    if (next.size() > opts.beam) next.erase(next.begin() + static_cast<std::ptrdiff_t>(opts.beam), next.end());
    level.clear();
    for (auto& r : next) level.push_back(r.tree);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

namespace detail {

inline Decimal checked_div(const Decimal& a, const Decimal& b) {
  if (b.is_zero()) throw EvalError("division by zero");
  return a / b;
}

}  // namespace detail

/// Exact evaluation. pct_change(a, b) = (a - b) / b and yields a percent;
/// ratio(a, b) = div(a, b) = a / b. add and sub keep the percent flag when
/// both operands carry it. Any zero divisor throws EvalError.
inline Value eval(const ExpressionTree& tree, std::span<const NumberMention> numbers) {
  if (tree.is_leaf()) {
    if (tree.leaf_index() >= numbers.size()) throw EvalError("leaf index out of range");
    const Value& v = numbers[tree.leaf_index()].value;
    if (!v.is_number()) throw EvalError("leaf is not a number");
    return Value::of_number(v.number, v.percent);
  }
  const Value a = eval(tree.left(), numbers);
  const Value b = eval(tree.right(), numbers);
  switch (tree.op()) {
    case OpKind::add: return Value::of_number(a.number + b.number, a.percent && b.percent);
    case OpKind::sub: return Value::of_number(a.number - b.number, a.percent && b.percent);
    case OpKind::mul: return Value::of_number(a.number * b.number);
    case OpKind::div:
    case OpKind::ratio: return Value::of_number(detail::checked_div(a.number, b.number));
    case OpKind::pct_change: return Value::of_number(detail::checked_div(a.number - b.number, b.number), true);
  }
  throw EvalError("unknown operator");
}

/// Seeded unit vector of length d, identical on every platform.
inline Vector default_weight_vector(std::size_t d, std::uint64_t seed) {
  Vector w(d);
  std::uint64_t state = seed ^ 0xA0761D6478BD642FULL;
  double norm = 0.0;
  for (auto& x : w) {
    state = text::splitmix64(state);
    x = static_cast<double>(state >> 11) * (2.0 / 9007199254740992.0) - 1.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& x : w) x /= norm;
  }
  return w;
}

namespace detail {

/// Integers 1900..2100 written as bare digits read as period labels.
inline bool is_year_like(const NumberMention& m) {
  const Value& v = m.value;
  if (!v.is_number() || v.percent) return false;
  const auto s = text::trim(v.surface);
  if (s.size() != 4) return false;
  for (char c : s) {
    if (!text::is_digit(c)) return false;
  }
  return v.number >= Decimal(1900) && v.number <= Decimal(2100);
}

inline std::string_view sentence_around(std::string_view passage, std::size_t begin, std::size_t end) {
  auto is_boundary = [&](std::size_t i) {
    const char c = passage[i];
    if (c != '.' && c != '!' && c != '?' && c != ';' && c != '\n') return false;
    return i + 1 >= passage.size() || text::is_space(passage[i + 1]);
  };
  std::size_t b = begin;
  while (b > 0 && !is_boundary(b - 1)) --b;
  std::size_t e = end;
  while (e < passage.size() && !is_boundary(e)) ++e;
  return passage.substr(b, e - b);
}

inline bool overlaps(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (token_match(x, y)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Groups the context numbers that relate to the question: passage numbers
/// whose sentence shares a content word with it, and table cells whose
/// header does (one group per column). Year-like labels are never operands.
/// Falls back to every non-year number when nothing relates.
inline OperandPlan plan_operands(std::string_view question, const Context& ctx) {
  std::vector<std::string> q_tokens;
  for (auto& t : text::tokenize(question)) {
    if (!detail::is_stopword(t)) q_tokens.push_back(std::move(t));
  }
  const auto& numbers = ctx.numbers;
  std::vector<std::size_t> passage_group;
  std::map<std::size_t, std::vector<std::size_t>> column_groups;
  std::vector<std::size_t> non_year;
  for (std::size_t i = 0; i < numbers.size(); ++i) {
    const auto& m = numbers[i];
    if (detail::is_year_like(m)) continue;
    non_year.push_back(i);
    if (m.where.source == Source::passage && ctx.passage && m.where.end <= ctx.passage->size()) {
      const auto sentence = detail::sentence_around(*ctx.passage, m.where.begin, m.where.end);
      if (detail::overlaps(q_tokens, text::tokenize(sentence))) passage_group.push_back(i);
    } else if (m.where.source == Source::table && ctx.table && m.where.column < ctx.table->column_count()) {
      if (detail::overlaps(q_tokens, detail::header_tokens(ctx.table->headers[m.where.column]))) {
        column_groups[m.where.column].push_back(i);
      }
    }
  }
  OperandPlan plan;
  if (!passage_group.empty()) plan.groups.push_back(passage_group);
  for (auto& [col, g] : column_groups) plan.groups.push_back(std::move(g));
  bool pairable = false;
  for (const auto& g : plan.groups) pairable = pairable || g.size() >= 2;
  if (!plan.groups.empty() && !pairable) {
    const auto merged = plan.all();
    plan.groups = {merged};
  }
  if (plan.groups.empty()) {
    if (!non_year.empty()) {
      plan.groups = {non_year};
    } else {
      plan = OperandPlan::single(numbers.size());
    }
  }
  return plan;
}

/// Enumerate, score, keep the best tree (highest scalar, then shallower,
/// then smallest canonical form) and evaluate it. H is 1 on a finite result.
inline Candidate symbolic_answer(std::string_view question, const Context& ctx, const Encoder& enc,
                                 std::span<const double> w, const NumSolverOptions& opts = {}) {
  if (ctx.numbers.empty()) return Candidate::absent(Modality::num);
  const OperandPlan plan = plan_operands(question, ctx);
  const auto trees = enumerate_trees(question, ctx.numbers, opts, enc, w, &plan);
  if (trees.empty()) return Candidate::absent(Modality::num);
  const TreeScorer scorer(enc, w, ctx.numbers);
  std::optional<detail::Ranked> best;
  for (const auto& t : trees) {
    detail::Ranked r{t, scorer.scalar(t), t.render()};
    if (!best || detail::better(r, *best)) best = std::move(r);
  }
  try {
    const Value v = eval(best->tree, ctx.numbers);
    Candidate c = Candidate::make(Modality::num, format_answer(v), 1.0);
    c.trace = best->key;
    return c;
  } catch (const EvalError&) {
    return Candidate::absent(Modality::num, best->key);
  }
}

}  // namespace finmoral
