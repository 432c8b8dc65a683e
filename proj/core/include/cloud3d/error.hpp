#pragma once

#include <stdexcept>
#include <string>

namespace cloud3d {

/// Base class for all errors raised by the library. The message is a single
/// line so the CLI can forward it verbatim.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: shape mismatches, non-finite values, broken invariants.
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent files. `locus` is "file:record" or similar.
class FormatError : public Error {
public:
  FormatError(const std::string& locus, const std::string& what)
      : Error(locus + ": " + what), locus_(locus) {}

  const std::string& locus() const noexcept { return locus_; }

private:
  std::string locus_;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public Error {
public:
  using Error::Error;
};

}  // namespace cloud3d
