#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dqa {

// Base of every typed failure raised by the library. `kind()` is the stable
// machine-readable name used in CLI messages and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DQA_DEFINE_ERROR(Name)                                     \
  class Name : public ::dqa::Error {                               \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// PDF errors carry the byte offset (or object number) where parsing failed.
class PdfError : public Error {
 public:
  PdfError(std::string kind, const std::string& message, std::int64_t offset)
      : Error(std::move(kind), message + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::int64_t offset() const noexcept { return offset_; }

 private:
  std::int64_t offset_;
};

class MalformedPdf : public PdfError {
 public:
  MalformedPdf(const std::string& message, std::int64_t offset)
      : PdfError("MalformedPdf", message, offset) {}
};

class UnsupportedPdf : public PdfError {
 public:
  UnsupportedPdf(const std::string& message, std::int64_t offset)
      : PdfError("UnsupportedPdf", message, offset) {}
};

DQA_DEFINE_ERROR(DecodeError)
DQA_DEFINE_ERROR(IoError)
DQA_DEFINE_ERROR(FormatError)
DQA_DEFINE_ERROR(ConfigError)

DQA_DEFINE_ERROR(EmptyVocab)
DQA_DEFINE_ERROR(NonFiniteLoss)
DQA_DEFINE_ERROR(DimensionMismatch)
DQA_DEFINE_ERROR(OutOfVocab)

DQA_DEFINE_ERROR(SchemaError)
DQA_DEFINE_ERROR(DanglingAnswer)
DQA_DEFINE_ERROR(TooFewCompanies)

DQA_DEFINE_ERROR(SingleClassData)
DQA_DEFINE_ERROR(NoPositives)
DQA_DEFINE_ERROR(ScorerUnavailable)
DQA_DEFINE_ERROR(ProtocolError)

DQA_DEFINE_ERROR(LengthMismatch)
DQA_DEFINE_ERROR(KeyMismatch)

DQA_DEFINE_ERROR(EmptyBatch)
DQA_DEFINE_ERROR(FileTooLarge)
DQA_DEFINE_ERROR(UnknownQuestionId)
DQA_DEFINE_ERROR(NotFound)
DQA_DEFINE_ERROR(NotReady)
DQA_DEFINE_ERROR(JobFailed)
DQA_DEFINE_ERROR(IllegalTransition)

DQA_DEFINE_ERROR(UsageError)

#undef DQA_DEFINE_ERROR

}  // namespace dqa
