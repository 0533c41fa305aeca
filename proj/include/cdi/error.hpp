#pragma once

#include <stdexcept>
#include <string>

namespace cdi {

enum class ErrorKind {
  InvalidArgument,
  Io,
  UnresolvableRoot,
  FetchFailure,
  EmptyArticle,
  TaggerFailure,
  EmptyDataset,
  TranslationFailure,
  SingleClassData,
  EmptyData,
  LangMismatch,
  ScorerUnavailable,
  MalformedScore,
  EmptyAnnotations,
  PairMismatch,
  LengthMismatch,
  DegenerateInput,
  AllFiltered,
  UnknownTopic,
  SchemaViolation,
};

const char* to_string(ErrorKind kind);

// Exit code reported by the command line driver for an error of this kind:
// 2 input error, 3 external service error, 4 schema error.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cdi
