#pragma once

#include <stdexcept>
#include <string>

namespace ehk {

/// Base class for every failure raised by the library. `code()` is a stable
/// machine-readable identifier that the CLI writes into its error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define EHK_DEFINE_ERROR(Name)                                          \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  }

EHK_DEFINE_ERROR(PoleProximity);
EHK_DEFINE_ERROR(NoTurningPoint);
EHK_DEFINE_ERROR(NonBracketable);
EHK_DEFINE_ERROR(StepFailure);
EHK_DEFINE_ERROR(MixedSegment);
EHK_DEFINE_ERROR(BranchLoss);
EHK_DEFINE_ERROR(JumpBudgetExceeded);
EHK_DEFINE_ERROR(EdgeContamination);
EHK_DEFINE_ERROR(BandExceeded);
EHK_DEFINE_ERROR(InsufficientDecay);
EHK_DEFINE_ERROR(TrajectoryBudgetExceeded);
EHK_DEFINE_ERROR(InvalidArgument);
EHK_DEFINE_ERROR(ConfigError);
EHK_DEFINE_ERROR(OutputConflict);

#undef EHK_DEFINE_ERROR

}  // namespace ehk
