// Parameter algebra for radial compressible Euler / Navier-Stokes implosion.
//
// The equation of state pi = (gamma-1)/gamma * rho^gamma is encoded through
// gamma > 1, or equivalently ell = 2/(gamma-1). The front speed r selects a
// self-similar scaling; its admissible range is bounded by the limiting speed
// r_eye(d, ell). All quantities here are closed-form.

#ifndef IMPLODE_PARAMS_HPP
#define IMPLODE_PARAMS_HPP

#include <optional>
#include <stdexcept>
#include <string>

namespace implode {

enum class Regime { Euler, NavierStokes };

struct ParamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Limiting speeds as free functions so that degenerate inputs (ell == d)
// can still be evaluated arithmetically, e.g. to check r_star == r_plus.
double r_star(int d, double ell);   // (d+ell)/(ell+sqrt(d))
double r_plus(int d, double ell);   // 1+(d-1)/(1+sqrt(ell))^2

// Smallest ell for which the Navier-Stokes compatibility e(r_star) > 0 can
// hold: ell_0(d) = (2 sqrt(d) - d)/(d - 1 - sqrt(d)).
struct EllThreshold {
    double value;
    bool ns_regime_exists;  // false where the formula is negative (d=2)
};
EllThreshold threshold_ell(int d);

struct Parameters {
    int d = 3;              // spatial dimension, 2 or 3
    double gamma = 2.0;     // adiabatic exponent, > 1
    double ell = 2.0;       // 2/(gamma-1)
    double p = 3.0;         // nonlinearity exponent, p-1 = 2(gamma-1) = 4/ell
    double mu = 0.0;        // viscosity
    double mu_prime = 0.0;  // second viscosity, mu + mu_prime >= 0
    Regime regime = Regime::Euler;

    double r_star = 0.0;    // (d+ell)/(ell+sqrt(d))
    double r_plus = 0.0;    // 1+(d-1)/(1+sqrt(ell))^2
    double r_eye = 0.0;     // r_star for ell<d, r_plus for ell>d
    bool ns_admissible = false;  // d==3 && ell>sqrt(3)

    std::optional<double> r;  // front speed, set once a profile is selected
    std::optional<double> e;  // compatibility exponent at that r

    double w_e() const;  // ell*(r-1)/d, requires r
    Parameters with_speed(double r_value) const;
};

// Build the parameter set from gamma (or from ell); both are stored with the
// exact relation ell = 2/(gamma-1) enforced at construction.
// Throws ParamError: "invalid-state-law" for gamma <= 1 (or ell <= 0),
// "degenerate-triple-point" for |ell - d| < 1e-6, "invalid-viscosity" for
// mu + mu_prime < 0, "ns-regime-violation" for NS outside d=3, ell>sqrt(3).
Parameters derive(int d, double gamma, double mu = 0.0, double mu_prime = 0.0,
                  Regime regime = Regime::Euler);
Parameters derive_from_ell(int d, double ell, double mu = 0.0,
                           double mu_prime = 0.0, Regime regime = Regime::Euler);

// e = [ell*(r-1) + r - 2]/2;  e > 0 iff r > (2+ell)/(1+ell).
double compat_exponent(const Parameters& params, double r);

// Threshold speed at which the compatibility exponent changes sign.
double compat_threshold_speed(double ell);  // (2+ell)/(1+ell)

}  // namespace implode

#endif
