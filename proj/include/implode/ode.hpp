// Embedded adaptive explicit Runge-Kutta pair (Dormand-Prince 5(4)).
//
// The caller drives the stepping loop; try_step() advances by at most h and
// reports the accepted step and the proposal for the next one. A fixed-step
// entry point is provided for convergence-order measurements.

#ifndef IMPLODE_ODE_HPP
#define IMPLODE_ODE_HPP

#include <array>
#include <cmath>
#include <functional>

namespace implode {

template <int N>
struct RK45 {
    using State = std::array<double, N>;
    using Rhs = std::function<State(double, const State&)>;

    double rtol = 1e-10;
    double atol = 1e-12;
    double h_min = 1e-15;
    double safety = 0.9;

    struct StepResult {
        bool accepted = false;
        double h_used = 0.0;
        double h_next = 0.0;
        double error = 0.0;
    };

    // One adaptive attempt from (t, y) with step h. On acceptance y and t are
    // advanced in place.
    StepResult try_step(const Rhs& f, double& t, State& y, double h) const {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                                c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                                a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                                b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                                b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                                e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640,
                                e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100,
                                e7 = -1.0 / 40;

        State k1 = f(t, y);
        State tmp;
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        State k2 = f(t + c2 * h, tmp);
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        State k3 = f(t + c3 * h, tmp);
        for (int i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        State k4 = f(t + c4 * h, tmp);
        for (int i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        State k5 = f(t + c5 * h, tmp);
        for (int i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                 a64 * k4[i] + a65 * k5[i]);
        State k6 = f(t + h, tmp);
        State y5;
        for (int i = 0; i < N; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                b6 * k6[i]);
        State k7 = f(t + h, y5);

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / N);

        StepResult res;
        res.error = err;
        res.h_used = h;
        const double fac =
            safety * std::pow(std::max(err, 1e-16), -0.2);
        const double clamped = std::min(5.0, std::max(0.2, fac));
        res.h_next = h * clamped;
        if (err <= 1.0) {
            res.accepted = true;
            t += h;
            y = y5;
        }
        return res;
    }

    // Single fixed step of the 5th-order solution (no error control).
    void fixed_step(const Rhs& f, double& t, State& y, double h) const {
        RK45<N> tmp = *this;
        tmp.rtol = 1e30;  // the error test always accepts
        tmp.atol = 1e30;
        tmp.try_step(f, t, y, h);
    }
};

}  // namespace implode

#endif
