#pragma once

#include <stdexcept>
#include <string>

namespace auditflow {

// Base of every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AUDITFLOW_DEFINE_ERROR(Name)   \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

// llm gateway
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what, bool transient = false)
      : Error(what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};
AUDITFLOW_DEFINE_ERROR(BudgetExceeded)
AUDITFLOW_DEFINE_ERROR(TimeoutError)
AUDITFLOW_DEFINE_ERROR(DimensionMismatch)
AUDITFLOW_DEFINE_ERROR(CacheCorrupt)
AUDITFLOW_DEFINE_ERROR(InvalidRequest)

// workflow
AUDITFLOW_DEFINE_ERROR(EmptyAnalysis)
AUDITFLOW_DEFINE_ERROR(PlanParseError)
AUDITFLOW_DEFINE_ERROR(FindingParseError)
AUDITFLOW_DEFINE_ERROR(SynthesisParseError)

// optimizer / scoring
AUDITFLOW_DEFINE_ERROR(GenerationFailed)
AUDITFLOW_DEFINE_ERROR(DegeneratePopulation)
AUDITFLOW_DEFINE_ERROR(MissingLogprobs)
AUDITFLOW_DEFINE_ERROR(JudgeParseError)

// ingestion / retrieval
AUDITFLOW_DEFINE_ERROR(FormatError)
AUDITFLOW_DEFINE_ERROR(SchemaError)
AUDITFLOW_DEFINE_ERROR(EmptyIndex)

// evaluation / app
AUDITFLOW_DEFINE_ERROR(EmptyQuerySet)
AUDITFLOW_DEFINE_ERROR(ConfigError)

#undef AUDITFLOW_DEFINE_ERROR

}  // namespace auditflow
