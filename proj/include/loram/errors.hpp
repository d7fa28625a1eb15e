#pragma once

#include <stdexcept>
#include <string>

namespace loram {

// Every failure raised by the library derives from Error and carries a short
// machine-readable kind tag, used by the CLI for its one-line error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

struct OracleTooLarge : Error {
  explicit OracleTooLarge(const std::string& what) : Error("oracle-too-large", what) {}
};

struct DegenerateInput : Error {
  explicit DegenerateInput(const std::string& what) : Error("degenerate-input", what) {}
};

struct UndefinedSimilarity : Error {
  explicit UndefinedSimilarity(const std::string& what) : Error("undefined-similarity", what) {}
};

struct DivergenceError : Error {
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error("divergence", what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

struct SweepError : Error {
  explicit SweepError(const std::string& what) : Error("sweep", what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

}  // namespace loram
