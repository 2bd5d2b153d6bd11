#include "implode/params.hpp"

#include <cmath>

namespace implode {

double r_star(int d, double ell) {
    return (d + ell) / (ell + std::sqrt(double(d)));
}

double r_plus(int d, double ell) {
    const double s = 1.0 + std::sqrt(ell);
    return 1.0 + (d - 1) / (s * s);
}

EllThreshold threshold_ell(int d) {
    const double sd = std::sqrt(double(d));
    const double den = d - 1 - sd;
    if (std::fabs(den) < 1e-14)
        throw ParamError("threshold-ell-undefined: d-1-sqrt(d) vanishes");
    const double v = (2.0 * sd - d) / den;
    // The inequality ell*(d-1-sqrt(d)) > 2 sqrt(d)-d flips direction for
    // d = 2 where no positive ell satisfies it; for d >= 4 the right side is
    // <= 0 and compatibility is automatic.
    const bool exists = (den > 0.0) || (2.0 * sd - d <= 0.0);
    return EllThreshold{v, exists};
}

double compat_threshold_speed(double ell) { return (2.0 + ell) / (1.0 + ell); }

namespace {

Parameters build(int d, double gamma, double ell, double mu, double mu_prime,
                 Regime regime) {
    if (d != 2 && d != 3) throw ParamError("invalid-dimension: d must be 2 or 3");
    if (!(gamma > 1.0) || !(ell > 0.0))
        throw ParamError("invalid-state-law: gamma must be > 1");
    if (std::fabs(ell - d) < 1e-6)
        throw ParamError("degenerate-triple-point: ell = d is excluded");
    if (mu + mu_prime < 0.0)
        throw ParamError("invalid-viscosity: mu + mu_prime must be >= 0");

    Parameters pr;
    pr.d = d;
    pr.gamma = gamma;
    pr.ell = ell;
    pr.p = 1.0 + 2.0 * (gamma - 1.0);  // == 1 + 4/ell
    pr.mu = mu;
    pr.mu_prime = mu_prime;
    pr.regime = regime;
    pr.r_star = implode::r_star(d, ell);
    pr.r_plus = implode::r_plus(d, ell);
    pr.r_eye = (ell < d) ? pr.r_star : pr.r_plus;
    pr.ns_admissible = (d == 3) && (ell > std::sqrt(3.0));

    if (regime == Regime::NavierStokes && !pr.ns_admissible)
        throw ParamError("ns-regime-violation: Navier-Stokes needs d=3 and ell>sqrt(3)");
    return pr;
}

}  // namespace

Parameters derive(int d, double gamma, double mu, double mu_prime, Regime regime) {
    if (!(gamma > 1.0)) throw ParamError("invalid-state-law: gamma must be > 1");
    return build(d, gamma, 2.0 / (gamma - 1.0), mu, mu_prime, regime);
}

Parameters derive_from_ell(int d, double ell, double mu, double mu_prime,
                           Regime regime) {
    if (!(ell > 0.0)) throw ParamError("invalid-state-law: ell must be > 0");
    return build(d, 1.0 + 2.0 / ell, ell, mu, mu_prime, regime);
}

double compat_exponent(const Parameters& params, double r) {
    return 0.5 * (params.ell * (r - 1.0) + r - 2.0);
}

double Parameters::w_e() const {
    if (!r) throw ParamError("front speed r not set");
    return ell * (*r - 1.0) / d;
}

Parameters Parameters::with_speed(double r_value) const {
    if (!(r_value > 1.0)) throw ParamError("front speed must satisfy r > 1");
    Parameters out = *this;
    out.r = r_value;
    out.e = compat_exponent(*this, r_value);
    return out;
}

}  // namespace implode
