#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"

namespace lramp {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double residual_sigma = 0.0;
    std::vector<double> residuals;
};

/// Ordinary least squares y = intercept + slope·x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    require(n == y.size() && n >= 2, "line fit needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0.0, "line fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    f.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.residuals[i] = y[i] - (f.intercept + f.slope * x[i]);
        ss += f.residuals[i] * f.residuals[i];
    }
    if (n > 2) {
        f.residual_sigma = std::sqrt(ss / static_cast<double>(n - 2));
        f.slope_stderr = f.residual_sigma / std::sqrt(sxx);
    }
    return f;
}

} // namespace lramp
