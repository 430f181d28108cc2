#pragma once

#include <stdexcept>
#include <string>

namespace lomach {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define LOMACH_ERROR(NAME)                                        \
    struct NAME : Error {                                         \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

LOMACH_ERROR(DimensionMismatch);
LOMACH_ERROR(MeanNotZero);
LOMACH_ERROR(AlphaTooLarge);
LOMACH_ERROR(TooFewSlices);
LOMACH_ERROR(ScaleLadderExhausted);
LOMACH_ERROR(Infeasible);
LOMACH_ERROR(NonpositiveDensity);
LOMACH_ERROR(NoAdmissibleSize);
LOMACH_ERROR(ResidualBudgetExceeded);
LOMACH_ERROR(Unresolvable);
LOMACH_ERROR(NoDecrease);
LOMACH_ERROR(PreconditionViolated);
LOMACH_ERROR(UnknownScenario);
LOMACH_ERROR(InsufficientSpan);
LOMACH_ERROR(IoError);

#undef LOMACH_ERROR

}  // namespace lomach
