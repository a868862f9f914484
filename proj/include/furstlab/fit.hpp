#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace furstlab {

/// Ordinary least squares line y = slope * x + intercept with the maximum
/// absolute residual, for reading exponents off log-log ladders.
struct LineFit {
    double slope = 0;
    double intercept = 0;
    double max_residual = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_line: need at least two matching points");
    double n = double(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double det = n * sxx - sx * sx;
    if (std::fabs(det) < 1e-12) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < xs.size(); ++i)
        f.max_residual = std::max(f.max_residual, std::fabs(ys[i] - (f.slope * xs[i] + f.intercept)));
    return f;
}

} // namespace furstlab
