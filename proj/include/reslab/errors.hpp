#pragma once

#include <stdexcept>
#include <string>

namespace reslab {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define RESLAB_DEFINE_ERROR(Name)                \
    class Name : public Error {                  \
    public:                                      \
        using Error::Error;                      \
    }

RESLAB_DEFINE_ERROR(EvaluationError);
RESLAB_DEFINE_ERROR(UnsupportedError);
RESLAB_DEFINE_ERROR(DecayAssumptionError);
RESLAB_DEFINE_ERROR(MeshRefinementError);
RESLAB_DEFINE_ERROR(PreconditionError);
RESLAB_DEFINE_ERROR(StaleInputError);
RESLAB_DEFINE_ERROR(BracketError);
RESLAB_DEFINE_ERROR(RangeError);
RESLAB_DEFINE_ERROR(FitWindowError);
RESLAB_DEFINE_ERROR(TruncationError);
RESLAB_DEFINE_ERROR(ResolutionError);
RESLAB_DEFINE_ERROR(ConsistencyError);
RESLAB_DEFINE_ERROR(StabilityError);
RESLAB_DEFINE_ERROR(ConfigError);

#undef RESLAB_DEFINE_ERROR

/// Numerical search ran out of budget without a decision.
class InconclusiveError : public Error {
public:
    InconclusiveError(const std::string& what, std::string trace)
        : Error(what), trace_(std::move(trace)) {}
    const std::string& trace() const noexcept { return trace_; }

private:
    std::string trace_;
};

} // namespace reslab
