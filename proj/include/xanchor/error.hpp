#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace xanchor {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file: bad magic, bad header, wrong arity.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  /// 1-based line number for text formats, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A binary token stream ended inside a record.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::uint64_t offset,
                  std::uint64_t record)
      : Error(what), offset_(offset), record_(record) {}
  std::uint64_t offset() const noexcept { return offset_; }
  /// 0-based index of the record that was cut short.
  std::uint64_t record() const noexcept { return record_; }

 private:
  std::uint64_t offset_;
  std::uint64_t record_;
};

/// Well-formed input carrying invalid values (non-finite floats, dimension
/// mismatches, duplicate keys, unencodable surfaces).
class DataError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  explicit DataError(const std::string& what, std::size_t index = npos)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class KeyError : public Error {
 public:
  using Error::Error;
};

/// Too few tokens to cluster; the caller keeps the plain anchor.
class IneligibleError : public Error {
 public:
  using Error::Error;
};

/// Procrustes on a zero cross-covariance has no unique answer.
class AmbiguityError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class RefinementError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete run configuration, raised before any computation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace xanchor
