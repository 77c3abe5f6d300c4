#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finmoral {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Table ingestion failure. `row()` is the 0-based data row index, or npos
/// when the failure is not tied to a row (empty input, bad JSON shape).
class IngestError : public Error {
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit IngestError(const std::string& what, std::size_t row = npos)
      : Error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

class SchemaError : public Error {
public:
  using Error::Error;
};

class SqlSyntaxError : public Error {
public:
  SqlSyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class EvalError : public Error {
public:
  using Error::Error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class DatasetError : public Error {
public:
  DatasetError(const std::string& what, std::size_t index)
      : Error("record " + std::to_string(index) + ": " + what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

class ClientError : public Error {
public:
  using Error::Error;
};

}  // namespace finmoral
