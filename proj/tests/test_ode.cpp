#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "implode/ode.hpp"

using namespace implode;

namespace {

// y' = -y + sin(t), y(0) = 1; exact solution
// y(t) = (sin t - cos t)/2 + 3/2 e^{-t}.
double exact(double t) {
    return 0.5 * (std::sin(t) - std::cos(t)) + 1.5 * std::exp(-t);
}

RK45<1>::Rhs rhs = [](double t, const std::array<double, 1>& y) {
    return std::array<double, 1>{-y[0] + std::sin(t)};
};

}  // namespace

TEST_CASE("adaptive integration meets the tolerance") {
    RK45<1> solver;
    solver.rtol = 1e-10;
    solver.atol = 1e-12;
    double t = 0.0;
    std::array<double, 1> y{1.0};
    double h = 1e-3;
    while (t < 5.0) {
        if (t + h > 5.0) h = 5.0 - t;
        const auto res = solver.try_step(rhs, t, y, h);
        h = std::min(res.h_next, 5.0 - t > 0 ? 5.0 - t : res.h_next);
        if (h <= 0) break;
    }
    CHECK(std::fabs(y[0] - exact(5.0)) < 1e-8);
}

TEST_CASE("fixed-step convergence at design order 5") {
    RK45<1> solver;
    auto run = [&](int n) {
        double t = 0.0;
        std::array<double, 1> y{1.0};
        const double h = 2.0 / n;
        for (int i = 0; i < n; ++i) solver.fixed_step(rhs, t, y, h);
        return std::fabs(y[0] - exact(2.0));
    };
    const double e1 = run(50);
    const double e2 = run(100);
    const double e3 = run(200);
    const double p12 = std::log2(e1 / e2);
    const double p23 = std::log2(e2 / e3);
    CHECK(p12 > 4.5);
    CHECK(p12 < 5.5);
    CHECK(p23 > 4.5);
    CHECK(p23 < 5.5);
}

TEST_CASE("rejected steps do not advance the state") {
    RK45<1> solver;
    solver.rtol = 1e-14;
    solver.atol = 1e-16;
    double t = 0.0;
    std::array<double, 1> y{1.0};
    const auto res = solver.try_step(rhs, t, y, 1.0);  // far too large
    CHECK_FALSE(res.accepted);
    CHECK(t == 0.0);
    CHECK(y[0] == 1.0);
    CHECK(res.h_next < 1.0);
}
