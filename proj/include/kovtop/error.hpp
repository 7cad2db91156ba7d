#pragma once

#include <stdexcept>
#include <string>

namespace kovtop {

enum class Errc {
    StepSizeUnderflow,
    NotFound,
    DegenerateInertia,
    AllZeroCenter,
    MuZero,
    NotDegenerate,
    SingularLeading,
    CoincidentPoints,
    DegenerateQuintic,
    BranchJump,
    NotFourRealRegime,
    RealityWindowViolated,
    OutsideWindow,
    DegenerateDenominator,
    QuadratureNonConvergent,
    NotConvergent,
    NonIntegralCharacteristic,
    RegimeViolated,
    ThetaZeroDenominator,
    ConditionViolated,
    NotRealizable,
    SchemaError,
    ValueError,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace kovtop
