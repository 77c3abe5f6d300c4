#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "finmoral/normalize.hpp"

namespace finmoral {

enum class Modality { sql, num, cot };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::sql: return "sql";
    case Modality::num: return "num";
    case Modality::cot: return "cot";
  }
  return "cot";
}

/// Lower is preferred when breaking ties.
inline int priority(Modality m) {
  switch (m) {
    case Modality::sql: return 0;
    case Modality::num: return 1;
    case Modality::cot: return 2;
  }
  return 3;
}

/// One answer proposed by a module. Absent candidates never enter the
/// candidate set.
struct Candidate {
  std::string answer;
  std::string normalized;
  Modality modality = Modality::cot;
  int sample_index = 0;  // 1-based for cot, 0 otherwise
  double heuristic = 0.0;  // H(a), in [0, 1]
  std::optional<std::string> rationale;
  bool present = false;
  /// Canonical SQL or expression rendering behind the answer, for logs.
  std::string trace;

  static Candidate absent(Modality m, std::string trace = {}) {
    Candidate c;
    c.modality = m;
    c.trace = std::move(trace);
    return c;
  }

  static Candidate make(Modality m, std::string answer, double heuristic, int sample_index = 0) {
    Candidate c;
    c.modality = m;
    c.normalized = normalize_answer(answer);
    c.answer = std::move(answer);
    c.heuristic = heuristic;
    c.sample_index = sample_index;
    c.present = true;
    return c;
  }
};

}  // namespace finmoral
