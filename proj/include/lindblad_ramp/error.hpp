#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lramp {

enum class Errc {
    invalid_argument,
    ep_degenerate,
    degenerate_mode,
    step_size_underflow,
    non_finite_state,
    order_overflow,
    radius_exceeded,
    singular_point,
    grid_too_coarse,
    quadrature_non_convergent,
    sign_change,
};

constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::ep_degenerate: return "EPDegenerate";
    case Errc::degenerate_mode: return "DegenerateMode";
    case Errc::step_size_underflow: return "StepSizeUnderflow";
    case Errc::non_finite_state: return "NonFiniteState";
    case Errc::order_overflow: return "OrderOverflow";
    case Errc::radius_exceeded: return "RadiusExceeded";
    case Errc::singular_point: return "SingularPoint";
    case Errc::grid_too_coarse: return "GridTooCoarse";
    case Errc::quadrature_non_convergent: return "QuadratureNonConvergent";
    case Errc::sign_change: return "SignChange";
    }
    return "Unknown";
}

/// Every failure in the library is reported through this type; code() is the
/// machine-readable part, what() carries the context.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw Error(Errc::invalid_argument, message);
}

} // namespace lramp
