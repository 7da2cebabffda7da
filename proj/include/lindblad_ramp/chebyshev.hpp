#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "error.hpp"

namespace lramp {

/// Chebyshev–Lobatto grid on [a, b], stored in increasing order.
///
/// Values on the grid are interpreted as the interpolating polynomial of
/// degree n; differentiation and the running integral act on that polynomial
/// through its Chebyshev coefficients.
class ChebyshevGrid {
public:
    ChebyshevGrid(std::size_t n, double a, double b) : n_(n), a_(a), b_(b)
    {
        require(n >= 2, "Chebyshev grid needs n >= 2");
        require(b > a, "Chebyshev grid needs a < b");
        x_.resize(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            // t runs from -1 to 1 so x increases with j
            const double t = -std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
            x_[j] = 0.5 * (a + b) + 0.5 * (b - a) * t;
        }
        x_.front() = a;
        x_.back() = b;
    }

    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return x_; }
    [[nodiscard]] std::size_t size() const noexcept { return n_ + 1; }
    [[nodiscard]] double lower() const noexcept { return a_; }
    [[nodiscard]] double upper() const noexcept { return b_; }

    /// Chebyshev coefficients a_k of the interpolant, in the variable t ∈ [-1, 1].
    [[nodiscard]] std::vector<double> coefficients(const std::vector<double>& f) const
    {
        require(f.size() == size(), "value count does not match the grid");
        std::vector<double> c(n_ + 1, 0.0);
        const double n = static_cast<double>(n_);
        for (std::size_t k = 0; k <= n_; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j <= n_; ++j) {
                // node j sits at t = cos(pi (n - j)/n)
                const double w = (j == 0 || j == n_) ? 0.5 : 1.0;
                s += w * f[j] * std::cos(std::numbers::pi * static_cast<double>(k) * (n - static_cast<double>(j)) / n);
            }
            c[k] = 2.0 * s / n;
        }
        c[0] *= 0.5;
        c[n_] *= 0.5;
        return c;
    }

    [[nodiscard]] std::vector<double> evaluate_coefficients(const std::vector<double>& c) const
    {
        std::vector<double> out(size());
        for (std::size_t j = 0; j <= n_; ++j) out[j] = clenshaw(c, tvalue(j));
        return out;
    }

    /// Value of the interpolant at an arbitrary x in [a, b].
    [[nodiscard]] double interpolate(const std::vector<double>& f, double x) const
    {
        return clenshaw(coefficients(f), (2.0 * x - a_ - b_) / (b_ - a_));
    }

    [[nodiscard]] std::vector<double> derivative(const std::vector<double>& f) const
    {
        const auto c = coefficients(f);
        // standard backward recurrence for the coefficients of the derivative
        std::vector<double> d(n_ + 2, 0.0);
        for (std::size_t k = n_; k-- > 0;) d[k] = d[k + 2] + 2.0 * static_cast<double>(k + 1) * c[k + 1];
        d[0] *= 0.5;
        d.resize(n_ + 1);
        for (double& v : d) v *= 2.0 / (b_ - a_);
        return evaluate_coefficients(d);
    }

    /// ∫_a^x f, evaluated at every node (Clenshaw–Curtis style).
    [[nodiscard]] std::vector<double> cumulative_integral(const std::vector<double>& f) const
    {
        const auto c = coefficients(f);
        std::vector<double> I(n_ + 2, 0.0);
        const auto at = [&](std::size_t k) { return k <= n_ ? c[k] : 0.0; };
        for (std::size_t k = 1; k <= n_ + 1; ++k) {
            const double prev = k == 1 ? 2.0 * at(0) : at(k - 1);
            I[k] = (prev - at(k + 1)) / (2.0 * static_cast<double>(k));
        }
        // fix the constant so the integral vanishes at t = -1
        double at_left = 0.0;
        for (std::size_t k = 1; k <= n_ + 1; ++k) at_left += (k % 2 == 0 ? 1.0 : -1.0) * I[k];
        I[0] = -at_left;
        for (double& v : I) v *= 0.5 * (b_ - a_);
        std::vector<double> out(size());
        for (std::size_t j = 0; j <= n_; ++j) out[j] = clenshaw(I, tvalue(j));
        out[0] = 0.0;
        return out;
    }

    /// Size of the trailing Chebyshev coefficients relative to the largest one;
    /// a resolved function has this near rounding level.
    [[nodiscard]] double tail_ratio(const std::vector<double>& f) const
    {
        const auto c = coefficients(f);
        double big = 0.0, tail = 0.0;
        const std::size_t cut = n_ + 1 - std::max<std::size_t>(3, (n_ + 1) / 16);
        for (std::size_t k = 0; k <= n_; ++k) {
            big = std::max(big, std::abs(c[k]));
            if (k >= cut) tail = std::max(tail, std::abs(c[k]));
        }
        return big == 0.0 ? 0.0 : tail / big;
    }

private:
    [[nodiscard]] double tvalue(std::size_t j) const
    {
        return -std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_));
    }

    static double clenshaw(const std::vector<double>& c, double t)
    {
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) {
            const double b0 = 2.0 * t * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        return t * b1 - b2 + c[0];
    }

    std::size_t n_;
    double a_, b_;
    std::vector<double> x_;
};

} // namespace lramp
