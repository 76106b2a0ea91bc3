#pragma once

#include <stdexcept>
#include <string>

namespace qintent {

/// Input file could not be opened or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A file parsed but violates its documented schema.
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A persisted artifact carries an unsupported format_version.
class VersionMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tokenization left nothing to work with.
class EmptyQuery : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(const std::string& what, std::size_t batch)
      : std::runtime_error(what), batch_(batch) {}
  std::size_t batch() const { return batch_; }

private:
  std::size_t batch_;
};

}  // namespace qintent
