#pragma once

#include <stdexcept>
#include <string>

namespace oselab {

// Exit-code buckets used by the CLI: config errors exit 2, certificate
// failures exit 3, numerical failures exit 4.
enum class ErrorKind { Config, Certificate, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

#define OSELAB_DEFINE_ERROR(Name, Kind)                                                 \
    class Name : public Error {                                                         \
    public:                                                                             \
        explicit Name(const std::string& msg) : Error(ErrorKind::Kind, #Name ": " + msg) {} \
    }

OSELAB_DEFINE_ERROR(ConfigError, Config);
OSELAB_DEFINE_ERROR(NegativeIterateOfNonInvertible, Config);
OSELAB_DEFINE_ERROR(SpaceMismatch, Config);
OSELAB_DEFINE_ERROR(SingularGenerator, Numerical);
OSELAB_DEFINE_ERROR(BlockSizeExceedsDimension, Config);
OSELAB_DEFINE_ERROR(NormMismatch, Config);
OSELAB_DEFINE_ERROR(AmbientMismatch, Config);
OSELAB_DEFINE_ERROR(RankDeficientBasis, Numerical);
OSELAB_DEFINE_ERROR(IllConditionedSplitting, Numerical);
OSELAB_DEFINE_ERROR(TransversalityFailure, Numerical);
OSELAB_DEFINE_ERROR(SeriesDivergence, Numerical);
OSELAB_DEFINE_ERROR(HorizonTooShort, Numerical);
OSELAB_DEFINE_ERROR(IntersectionRankDeficit, Numerical);
OSELAB_DEFINE_ERROR(BlockSingular, Numerical);
OSELAB_DEFINE_ERROR(UnreachableGamma, Certificate);
OSELAB_DEFINE_ERROR(DegeneratePair, Config);
OSELAB_DEFINE_ERROR(PairOutsideRegularSet, Certificate);
OSELAB_DEFINE_ERROR(PairTooFar, Certificate);
OSELAB_DEFINE_ERROR(HypothesisSynthesisFailure, Certificate);
OSELAB_DEFINE_ERROR(DegenerateDesign, Config);
OSELAB_DEFINE_ERROR(ConstraintViolation, Config);

#undef OSELAB_DEFINE_ERROR

}  // namespace oselab
