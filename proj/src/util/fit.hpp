#pragma once

#include <vector>

namespace rn {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

// Ordinary least squares y ≈ slope·x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rn
