#include "cdi/error.hpp"

namespace cdi {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::UnresolvableRoot: return "UnresolvableRoot";
    case ErrorKind::FetchFailure: return "FetchFailure";
    case ErrorKind::EmptyArticle: return "EmptyArticle";
    case ErrorKind::TaggerFailure: return "TaggerFailure";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::TranslationFailure: return "TranslationFailure";
    case ErrorKind::SingleClassData: return "SingleClassData";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::LangMismatch: return "LangMismatch";
    case ErrorKind::ScorerUnavailable: return "ScorerUnavailable";
    case ErrorKind::MalformedScore: return "MalformedScore";
    case ErrorKind::EmptyAnnotations: return "EmptyAnnotations";
    case ErrorKind::PairMismatch: return "PairMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::AllFiltered: return "AllFiltered";
    case ErrorKind::UnknownTopic: return "UnknownTopic";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FetchFailure:
    case ErrorKind::TranslationFailure:
    case ErrorKind::ScorerUnavailable:
    case ErrorKind::MalformedScore:
      return 3;
    case ErrorKind::SchemaViolation:
      return 4;
    default:
      return 2;
  }
}

}  // namespace cdi
