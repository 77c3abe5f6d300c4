#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finmoral/context.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/text.hpp"

namespace finmoral {

using Vector = std::vector<double>;

/// Shared text encoder. Implementations must be deterministic and always
/// return vectors of length dimension().
class Encoder {
public:
  virtual ~Encoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual Vector encode(std::string_view text) const = 0;
};

/// Signed feature hashing over lowercase alphanumeric tokens.
///
/// Each token hashes with FNV-1a seeded by splitmix64(seed); the bucket is
/// that hash mod d, and the sign is the top bit of splitmix64(hash). Token
/// vectors are summed and L2-normalized. Text without tokens maps to zero.
class HashEncoder final : public Encoder {
public:
  static constexpr std::size_t kDefaultDimension = 64;

  explicit HashEncoder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = 0)
      : dimension_(dimension), basis_(text::kFnvOffset ^ text::splitmix64(seed)) {
    if (dimension == 0) throw DimensionError("encoder dimension must be positive");
  }

  std::size_t dimension() const override { return dimension_; }

  Vector encode(std::string_view s) const override {
    Vector v(dimension_, 0.0);
    for (const auto& token : text::tokenize(s)) {
      const std::uint64_t h = text::fnv1a64(token, basis_);
      const std::size_t bucket = static_cast<std::size_t>(h % dimension_);
      const bool negative = (text::splitmix64(h) >> 63) != 0;
      v[bucket] += negative ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    return v;
  }

private:
  std::size_t dimension_;
  std::uint64_t basis_;
};

inline void add_into(Vector& acc, std::span<const double> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct EncodedContext {
  Vector question;
  /// [row][column] -> enc(cell) + enc(header)
  std::vector<std::vector<Vector>> table;
  Vector passage;
  std::vector<Vector> numbers;
};

/// Encodes every context component with the shared encoder. An absent
/// passage encodes as the zero vector.
inline EncodedContext encode_context(const Encoder& enc, std::string_view question, const Context& ctx) {
  const std::size_t d = enc.dimension();
  if (d == 0) throw DimensionError("encoder dimension must be positive");
  EncodedContext out;
  out.question = enc.encode(question);
  if (ctx.table) {
    const Table& t = *ctx.table;
    std::vector<Vector> header_vecs;
    header_vecs.reserve(t.headers.size());
    for (const auto& h : t.headers) header_vecs.push_back(enc.encode(h));
    out.table.reserve(t.rows.size());
    for (const auto& row : t.rows) {
      std::vector<Vector> encoded_row;
      encoded_row.reserve(row.size());
      for (std::size_t j = 0; j < row.size(); ++j) {
        Vector cell = enc.encode(row[j].surface);
        add_into(cell, header_vecs[j]);
        encoded_row.push_back(std::move(cell));
      }
      out.table.push_back(std::move(encoded_row));
    }
  }
  out.passage = ctx.passage ? enc.encode(*ctx.passage) : Vector(d, 0.0);
  out.numbers.reserve(ctx.numbers.size());
  for (const auto& m : ctx.numbers) out.numbers.push_back(enc.encode(m.value.surface));
  return out;
}

}  // namespace finmoral
