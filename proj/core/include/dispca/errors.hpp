#pragma once

#include <stdexcept>
#include <string>

namespace dispca {

/// Iterative factorization failed to converge; carries the residual that
/// remained when the iteration cap was hit.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// No candidate embedding passed the cross-validation test.
class BoostFailure : public std::runtime_error {
 public:
  explicit BoostFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Normal equations are singular and no ridge term was requested.
class RankError : public std::runtime_error {
 public:
  explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset file could not be parsed; carries the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}
  const std::string& path() const { return path_; }
  long line() const { return line_; }

 private:
  std::string path_;
  long line_;
};

}  // namespace dispca
