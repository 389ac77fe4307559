#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define CASCADE_DEFINE_ERROR(Name)                  \
    struct Name : Error {                           \
        using Error::Error;                         \
    }

CASCADE_DEFINE_ERROR(ConfigInvalid);
CASCADE_DEFINE_ERROR(NonSupercritical);
CASCADE_DEFINE_ERROR(NoBoundarySolution);
CASCADE_DEFINE_ERROR(NotBoundaryNormalized);
CASCADE_DEFINE_ERROR(MethodUnsupported);
CASCADE_DEFINE_ERROR(MethodMismatch);
CASCADE_DEFINE_ERROR(DepthOutOfRange);
CASCADE_DEFINE_ERROR(InvalidNode);
CASCADE_DEFINE_ERROR(BudgetExceeded);
CASCADE_DEFINE_ERROR(StateBelowBarrier);
CASCADE_DEFINE_ERROR(DomainError);
CASCADE_DEFINE_ERROR(InsufficientDepth);
CASCADE_DEFINE_ERROR(WindowOutOfRange);
CASCADE_DEFINE_ERROR(DepthTooShallow);
CASCADE_DEFINE_ERROR(NonpositiveMass);
CASCADE_DEFINE_ERROR(RenewalDomainExceeded);
CASCADE_DEFINE_ERROR(BarrierViolated);
CASCADE_DEFINE_ERROR(RejectionBudgetExceeded);
CASCADE_DEFINE_ERROR(WorkerFailure);

#undef CASCADE_DEFINE_ERROR

} // namespace cascade
