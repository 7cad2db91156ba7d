#include "kovtop/error.hpp"

namespace kovtop {

const char* to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::StepSizeUnderflow: return "StepSizeUnderflow";
    case Errc::NotFound: return "NotFound";
    case Errc::DegenerateInertia: return "DegenerateInertia";
    case Errc::AllZeroCenter: return "AllZeroCenter";
    case Errc::MuZero: return "MuZero";
    case Errc::NotDegenerate: return "NotDegenerate";
    case Errc::SingularLeading: return "SingularLeading";
    case Errc::CoincidentPoints: return "CoincidentPoints";
    case Errc::DegenerateQuintic: return "DegenerateQuintic";
    case Errc::BranchJump: return "BranchJump";
    case Errc::NotFourRealRegime: return "NotFourRealRegime";
    case Errc::RealityWindowViolated: return "RealityWindowViolated";
    case Errc::OutsideWindow: return "OutsideWindow";
    case Errc::DegenerateDenominator: return "DegenerateDenominator";
    case Errc::QuadratureNonConvergent: return "QuadratureNonConvergent";
    case Errc::NotConvergent: return "NotConvergent";
    case Errc::NonIntegralCharacteristic: return "NonIntegralCharacteristic";
    case Errc::RegimeViolated: return "RegimeViolated";
    case Errc::ThetaZeroDenominator: return "ThetaZeroDenominator";
    case Errc::ConditionViolated: return "ConditionViolated";
    case Errc::NotRealizable: return "NotRealizable";
    case Errc::SchemaError: return "SchemaError";
    case Errc::ValueError: return "ValueError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code)
{
}

}  // namespace kovtop
