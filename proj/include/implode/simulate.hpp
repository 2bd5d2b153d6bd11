// Renormalized-flow integration and physical-variable checks.
//
// The flow evolves (rho_T, Psi_T) on a radial grid:
//   d rho/dtau = -rho Lap Psi - (ell(r-1)/2) rho - (2 Psi' + Z) rho'
//   d Psi/dtau = b^2 F(u, rho) - [ (Psi')^2 + (r-2) Psi + Z Psi' + rho^{p-1} ]
// with b = e^{-e tau} in the Navier-Stokes regime and F the cumulative
// viscous quadrature. The exact profile is a stationary state at b = 0.

#ifndef IMPLODE_SIMULATE_HPP
#define IMPLODE_SIMULATE_HPP

#include <functional>
#include <vector>

#include "implode/profile.hpp"

namespace implode {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Perturbation {
    double amplitude = 0.0;  // relative bump on rho, absolute on u
    double center = 1.0;
    double width = 0.3;
};

struct SimOptions {
    int n_nodes = 2001;
    double Z_out = 0.0;  // 0 -> 8 * Z2
    double cfl = 0.4;
    double tau0 = 0.0;
    bool viscous = false;  // turns on the b^2 dissipation term
    double diag_interval = 0.05;
    double hat_Z = 0.0;  // compact diagnostic radius; 0 -> Z2
    // Optionally measure deviations modulo the blow-up-time translation
    // family (the exact lambda = r symmetry mode); raw deviations otherwise.
    bool orbital_deviation = false;
};

struct SimState {
    Parameters params;
    double r = 0.0;
    double tau = 0.0;
    double h = 0.0;
    std::vector<double> Z, rho, Psi;
    bool viscous = false;
    double e_exponent = 0.0;  // compatibility exponent at r

    double b() const;  // e^{-e tau} when viscous, else 0
};

struct DiagnosticsSample {
    double tau;
    double residual_rho, residual_psi;    // stationary-equation residuals
    double dev_rho, dev_u;                // sup deviations on {Z <= hat_Z}
    double norm_m0, norm_m1, norm_m2;     // weighted norms, sigma = 0
};

struct Diagnostics {
    std::vector<DiagnosticsSample> samples;
    bool blowup = false, vacuum = false;
    double tau_end = 0.0;
};

// Initial state from the dampened profile (or the raw profile fields when
// dampened == nullptr). Throws SimError when the perturbation drives
// rho <= 0.
SimState init(const PhysicalProfile& physical, const DampenedProfile* dampened,
              const Perturbation& pert, const SimOptions& opt);

// Time derivative of the state (single evaluation of the spatial operator).
struct RhsFields {
    std::vector<double> drho, dPsi;
};
RhsFields rhs(const SimState& state);

// Advance to tau_end with SSP-RK3 under a CFL bound; diagnostics are sampled
// against the reference fields captured at initialization.
Diagnostics run(SimState& state, double tau_end, const SimOptions& opt,
                const PhysicalProfile& reference);

// Exact self-similar fields in the original (hat) variables.
struct RateCurves {
    std::vector<double> t;           // hat-time samples approaching T
    std::vector<double> sup_rho;     // sup_x rho(t, .)
    std::vector<double> sup_u;       // sup_x |u(t, .)|
    std::vector<double> fixed_x_rho; // rho(t, x0) * x0^{2(r-1)/(gamma-1)}
    double fitted_exp_rho = 0.0;     // expect  -ell (r-1)/r
    double fitted_exp_u = 0.0;       // expect  -(r-1)/r
    double x0 = 0.5;
};

RateCurves physical_rates(const PhysicalProfile& physical, double T_hat,
                          int n_samples = 40);

// First-order finite-volume integration of radial compressible Euler in
// original variables, from exact self-similar data at t0 to t1 < T.
struct PhysicalCheck {
    double linf_rho = 0.0, l1_rho = 0.0;
    double linf_u = 0.0, l1_u = 0.0;
    double mass_error = 0.0;  // conservation defect relative to boundary flux
    int n_cells = 0;
};

PhysicalCheck physical_check(const PhysicalProfile& physical, double T_hat,
                             double t0, double t1, int n_cells,
                             double x_lo = 0.3, double x_hi = 3.0);

}  // namespace implode

#endif
