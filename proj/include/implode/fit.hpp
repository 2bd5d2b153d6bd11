// Least-squares line fit, used for log-log tail exponents and order studies.

#ifndef IMPLODE_FIT_HPP
#define IMPLODE_FIT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace implode {

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    LinFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// Slope of log|y| against log x; pairs with y <= 0 are rejected by the caller.
inline LinFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(std::fabs(y[i]));
    }
    return linear_fit(lx, ly);
}

}  // namespace implode

#endif
