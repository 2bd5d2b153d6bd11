// Coercivity (repulsivity) diagnostics of a constructed profile: the
// quadratic-form margins inside and outside the acoustic cone, the surface
// gravity at the sonic point, and the characteristic speeds.

#ifndef IMPLODE_REPULSIVITY_HPP
#define IMPLODE_REPULSIVITY_HPP

#include <vector>

#include "implode/profile.hpp"

namespace implode {

struct LambdaFields {
    std::vector<double> Z;
    std::vector<double> lam_w, lam_sigma;
    std::vector<double> F;  // sigma + Lambda sigma = d(Z sigma)/dZ
};

// Lambda fields on an evaluation grid (log-spaced plus the crossing point);
// values at Z2 come from the eigendirection limit stored in the curve.
LambdaFields lambda_fields(const ProfileCurve& curve, int n_points = 4096);

struct Margin {
    double value = 0.0;     // attained minimum
    double location = 0.0;  // Z where it is attained
    bool positive = false;
};

struct RepulsivityReport {
    // Inside the cone [0, Z2]: (1-w-Lw)^2 - F^2 and 1-w-Lw-(1-w)F/sigma.
    Margin inside_q1, inside_q2;
    // Outside [Z2, Z_max]: (1-w-Lw)^2 - F^2 and 1-w-Lw.
    Margin outside_q1, outside_qout;
    double kappa = 0.0;        // surface gravity, two evaluations compared
    double kappa_alt = 0.0;
    double Z2 = 0.0, Z_max = 0.0;
    // Analytic tail floor for the outside quantities beyond Z_max, from the
    // fitted c_w, c_sigma: both limits are 1 + O(Z^-r).
    double tail_floor = 0.0;
    bool ns_regime = false;  // d = 3 and ell > sqrt(3)
    bool inside_ok = false;
    bool outside_ok = false;  // asserted only in the NS regime
};

RepulsivityReport margins(const ProfileCurve& curve, const Parameters& params,
                          int n_points = 4096);

// kappa = (-w' - sigma')|_{P2}; the second route evaluates
// 1 - w - Lw - (1-w) F / sigma at P2. Both are returned by margins(); this
// helper returns the primary value.
double surface_gravity(const ProfileCurve& curve);

struct CharacteristicSpeeds {
    std::vector<double> Z;
    std::vector<double> L;     // (1-w) - sigma, vanishes at Z2
    std::vector<double> Lbar;  // (1-w) + sigma
    std::vector<double> zero_crossings;  // Z locations of L sign changes
    bool multi_sonic = false;
};

CharacteristicSpeeds characteristic_speeds(const ProfileCurve& curve,
                                           int n_points = 4096);

}  // namespace implode

#endif
