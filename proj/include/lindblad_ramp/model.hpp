#pragma once

#include <array>
#include <cmath>
#include <string>

#include "error.hpp"

namespace lramp {

/// Which Liouvillian drives the mode: the full Lindblad generator with the
/// recycling term, or the trace-non-preserving generator of H_eff alone.
enum class Kind { full_lindblad, no_jump };

inline std::string to_string(Kind kind) { return kind == Kind::full_lindblad ? "full" : "nojump"; }

using Vec4 = std::array<double, 4>;

/// Physical parameters of one momentum mode (hbar = 1).
///
/// Gapped modes carry delta > 0 and epsilon = gamma0 / delta; gapless modes
/// carry delta == 0, gamma0 > 0 and epsilon == 0 (unused).
struct ModeParams {
    double p = 0.0;
    double delta = 0.0;
    double gamma0 = 0.0;
    double tau = 1.0;
    double epsilon = 0.0;

    static ModeParams gapped(double p, double delta, double epsilon, double tau)
    {
        ModeParams m{p, delta, epsilon * delta, tau, epsilon};
        m.validate();
        return m;
    }

    static ModeParams gapless(double p, double gamma0, double tau)
    {
        ModeParams m{p, 0.0, gamma0, tau, 0.0};
        m.validate();
        return m;
    }

    /// Gapped when delta > 0, gapless otherwise.
    static ModeParams make(double p, double delta, double gamma0, double tau)
    {
        return delta > 0.0 ? gapped(p, delta, gamma0 / delta, tau) : gapless(p, gamma0, tau);
    }

    [[nodiscard]] bool is_gapped() const noexcept { return delta > 0.0; }
    [[nodiscard]] double energy2() const noexcept { return p * p + delta * delta; }

    /// Natural energy scale: the gap, or the final coupling without a gap.
    [[nodiscard]] double scale() const noexcept { return is_gapped() ? delta : gamma0; }

    /// Dimensionless ramp rate Δτ (gapped) or γ0τ (gapless).
    [[nodiscard]] double rate() const noexcept { return scale() * tau; }

    /// Scaled momentum y = p / scale.
    [[nodiscard]] double y() const noexcept { return p / scale(); }

    void validate() const
    {
        require(std::isfinite(p) && std::isfinite(delta) && std::isfinite(gamma0) && std::isfinite(tau),
                "mode parameters must be finite");
        require(tau > 0.0, "tau must be positive");
        require(delta >= 0.0, "delta must be non-negative");
        require(gamma0 >= 0.0, "gamma0 must be non-negative");
        if (delta > 0.0) {
            require(epsilon == gamma0 / delta, "gapped mode requires epsilon == gamma0 / delta");
        } else {
            require(gamma0 > 0.0, "gapless mode requires gamma0 > 0");
        }
    }
};

/// Coherence-vector representation of a two-level density matrix.
///
/// Holds the four components of |rho> = (Tr rho, <sx>, <sy>, <sz>) / 2 scaled
/// by the (possibly non-unit) trace, so c[0] == 1/2 for a normalised state and
/// every expectation value is c[i] / c[0].
struct CoherenceVector {
    Vec4 c{0.5, 0.0, 0.0, 0.0};

    static CoherenceVector from_bloch(double sx, double sy, double sz, double trace = 1.0)
    {
        return {{0.5 * trace, 0.5 * trace * sx, 0.5 * trace * sy, 0.5 * trace * sz}};
    }

    [[nodiscard]] double trace_coordinate() const noexcept { return c[0]; }
    [[nodiscard]] double expectation(int axis) const noexcept { return c[static_cast<std::size_t>(axis)] / c[0]; }
    [[nodiscard]] std::array<double, 3> bloch() const noexcept
    {
        return {c[1] / c[0], c[2] / c[0], c[3] / c[0]};
    }
    [[nodiscard]] double bloch_length() const noexcept
    {
        return std::sqrt(c[1] * c[1] + c[2] * c[2] + c[3] * c[3]) / std::abs(c[0]);
    }
};

} // namespace lramp
