#include "util/fit.hpp"

#include <algorithm>
#include <cmath>

#include "util/error.hpp"

namespace rn {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::invalid_argument, "fit_line", "need at least two paired samples");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) fail(ErrorKind::invalid_argument, "fit_line", "abscissae are all equal");
    LineFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i)
        out.max_residual = std::max(out.max_residual, std::abs(y[i] - out.slope * x[i] - out.intercept));
    return out;
}

}  // namespace rn
