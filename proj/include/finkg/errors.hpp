#pragma once

#include <stdexcept>
#include <string>

namespace finkg {

/// Base for every error raised by the library. `kind()` is a stable
/// identifier suitable for logs and rejected-fragment records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FINKG_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

// preprocess
FINKG_DEFINE_ERROR(MalformedRecord);
// kg_schema
FINKG_DEFINE_ERROR(NotNumeric);
FINKG_DEFINE_ERROR(EmptyAfterNormalization);
FINKG_DEFINE_ERROR(ParseError);
// llm / extraction
FINKG_DEFINE_ERROR(ConfigError);
FINKG_DEFINE_ERROR(LlmUnavailable);
FINKG_DEFINE_ERROR(LlmTruncated);
FINKG_DEFINE_ERROR(NoJsonFound);
// embedding
FINKG_DEFINE_ERROR(ProviderUnavailable);
FINKG_DEFINE_ERROR(EmptyText);
FINKG_DEFINE_ERROR(DimensionMismatch);
// retriever
FINKG_DEFINE_ERROR(LengthMismatch);
FINKG_DEFINE_ERROR(DegenerateData);
// evaluator
FINKG_DEFINE_ERROR(DivideByZero);
FINKG_DEFINE_ERROR(BadReference);
FINKG_DEFINE_ERROR(RowNotFound);
FINKG_DEFINE_ERROR(JudgeError);
FINKG_DEFINE_ERROR(EmptyInput);
FINKG_DEFINE_ERROR(ZeroBaseline);
// pipeline
FINKG_DEFINE_ERROR(MissingArtifact);

#undef FINKG_DEFINE_ERROR

}  // namespace finkg
