// Construction of the self-similar profile.
//
// Pipeline: even power series at Z = 0, adaptive integration of the phase
// ODE to the sonic line, bisection on the front speed r until the trajectory
// hits the sonic point P2, eigendirection crossing, tail integration to the
// far field, reconstruction of the physical fields (rho_P, Psi_P), and
// dampening of the slow tail into finite-energy data.

#ifndef IMPLODE_PROFILE_HPP
#define IMPLODE_PROFILE_HPP

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "implode/emden.hpp"
#include "implode/params.hpp"

namespace implode {

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Origin series

// Even truncated series Psi = sum psi[k] Z^{2k}, rho = sum g[k] Z^{2k}
// solving the profile equations order by order with
// Psi(0) = -1/(r-2), Psi'(0) = 0, rho(0) = 1.
struct OriginSeries {
    double r = 0.0;
    std::vector<double> psi;  // Z^{2k} coefficients of Psi_P
    std::vector<double> g;    // Z^{2k} coefficients of rho_P

    double psi_at(double Z) const;
    double dpsi_at(double Z) const;
    double rho_at(double Z) const;
    double drho_at(double Z) const;
    // Emden variables at small Z > 0.
    PhasePoint phase_at(double Z, const Parameters& params) const;
    // Max absolute residual of the two profile equations at Z.
    double residual(double Z, const Parameters& params) const;
};

// order = highest retained power of Z (even, >= 4).
OriginSeries origin_series(const Parameters& params, double r, int order = 6);

// ---------------------------------------------------------------------------
// Integration to the sonic line and classification

enum class SonicOutcome {
    ReachesP2,        // miss distance within tolerance
    HitsSonicAbove,   // w > w2 at closest sonic approach
    HitsSonicBelow,   // w < w2
    NoSonicEncounter, // left the window without meeting the line
    StepUnderflow,    // step-size collapse away from the sonic line
};

struct CurveSample {
    double y;      // log Z
    double Z;
    double w, sigma;
    double lam_w, lam_sigma;    // Lambda = Z d/dZ along the trajectory
    double lam2_w, lam2_sigma;  // filled by post-processing
};

struct SonicApproach {
    SonicOutcome outcome = SonicOutcome::NoSonicEncounter;
    // Signed distance along the sonic line from the trajectory's closest
    // approach to the reference root; positive means w > w2.
    double miss = 0.0;
    PhasePoint closest{};
    double Z_closest = 0.0;
    int root_index = 0;
};

struct IntegrateOptions {
    double Z0 = 1e-4;        // series launch radius
    int series_order = 6;
    double rtol = 1e-10;
    double atol = 1e-12;
    double sonic_tol = 1e-9; // |Delta| < sonic_tol * (1 + w^2 + sigma^2)
    double Z_cap = 50.0;
    bool record = true;      // keep samples (scans turn this off)
};

struct SonicRun {
    std::vector<CurveSample> samples;
    SonicApproach approach[2];  // miss data relative to both quadratic roots
    PhasePoint final_point{};
    double Z_final = 0.0;
    bool met_sonic = false;
};

SonicRun integrate_to_sonic(const Parameters& params, double r,
                            const IntegrateOptions& opt = {});

// ---------------------------------------------------------------------------
// Shooting

struct ShootOptions {
    double r_lo = 0.0;        // 0 -> 1 + 1e-2 by default
    double r_hi = 0.0;        // 0 -> r_eye - 1e-4 by default
    int scan_points = 96;
    double tol_r = 1e-12;
    double miss_tol = 1e-6;
    IntegrateOptions integ{};
};

struct ShootResult {
    double r = 0.0;
    double miss = 0.0;
    int root_index = 0;  // quadratic root the trajectory selects
    double bracket_lo = 0.0, bracket_hi = 0.0;
};

// All bisection roots found by scanning the bracket. Empty result list means
// no sign change anywhere ("no-root-in-bracket" at the CLI level).
std::vector<ShootResult> shoot_speed_scan(const Parameters& params,
                                          const ShootOptions& opt = {});

// Single bracket bisection; throws ProfileError("no-root-in-bracket") when
// the classifications at the endpoints agree.
ShootResult shoot_speed(const Parameters& params, double r_lo, double r_hi,
                        const ShootOptions& opt = {});

// ---------------------------------------------------------------------------
// Completed curve

struct CrossingInfo {
    double Z2 = 0.0, y2 = 0.0;
    double w2 = 0.0, sigma2 = 0.0;
    std::array<double, 2> direction{};   // unit crossing direction (w, sigma)
    double eigenvalue = 0.0;             // eigenvalue along that direction
    std::array<double, 2> lam_limit{};   // (Lambda w, Lambda sigma) at P2
    std::array<double, 2> lam2_limit{};  // second-order limits (fit)
    double tail_nudge = 0.0;             // transverse offset of the tail leg
    int root_index = 0;
    CriticalPoint eig;
};

struct ProfileCurve {
    Parameters params;  // carries r
    double r = 0.0;
    std::vector<CurveSample> samples;  // strictly increasing Z
    std::size_t i_cross = 0;           // index of the P2 sample
    CrossingInfo crossing;
    double Z2 = 0.0;
    double c_w = 0.0, c_sigma = 0.0;
    double tail_slope_w = 0.0, tail_slope_sigma = 0.0;
    double miss = 0.0;

    double Z_min() const { return samples.front().Z; }
    double Z_max() const { return samples.back().Z; }

    // 4-point Lagrange interpolation in y = log Z.
    double w_at(double Z) const;
    double sigma_at(double Z) const;
    double lam_w_at(double Z) const;
    double lam_sigma_at(double Z) const;
    double lam2_w_at(double Z) const;
    double lam2_sigma_at(double Z) const;
};

struct TailOptions {
    double Z_max_factor = 1e3;  // integrate to Z_max_factor * Z2
    double slope_tol = 0.05;    // wrong-branch guard on the fitted exponent
};

struct ProfileOptions {
    ShootOptions shoot{};
    TailOptions tail{};
    double cross_step = 1e-5;  // relative landing distance past P2
};

// shoot -> cross -> tail -> post-process, as one pipeline.
ProfileCurve compute_profile(const Parameters& params, const ProfileOptions& opt = {});

// Individual stages, exposed for tests and for re-running with a known r.
ProfileCurve build_curve_at_speed(const Parameters& params, const ShootResult& root,
                                  const ProfileOptions& opt = {});

// ---------------------------------------------------------------------------
// Physical profile

struct PhysicalProfile {
    Parameters params;
    double r = 0.0;
    double Z2 = 0.0;
    std::vector<double> Z;      // grid (same as curve samples)
    std::vector<double> rho;    // rho_P = (phi Z sigma)^{ell/2}
    std::vector<double> dPsi;   // Psi_P' = -Z w / 2
    std::vector<double> Psi;    // cumulative, Psi_P(0) = -1/(r-2)
    std::vector<double> Q;      // rho_P^{p-1} = phi^2 Z^2 sigma^2
    double c_P_pm1 = 0.0;       // fitted tail constant of Q ~ c Z^{-2(r-1)}
    double q_tail_slope = 0.0;

    double rho_at(double Zq) const;
    double drho_at(double Zq) const;   // d(rho_P)/dZ via Lambda fields
    double dPsi_at(double Zq) const;
    double Psi_at(double Zq) const;
    double Q_at(double Zq) const;

    const ProfileCurve* curve = nullptr;  // borrowed; set by reconstruct
};

PhysicalProfile reconstruct_physical(const ProfileCurve& curve,
                                     const Parameters& params);

// ---------------------------------------------------------------------------
// Dampened profile

struct DampenedProfile {
    Parameters params;
    double n_P = 10.0;
    double tau = 0.0;
    double Zstar = 1.0;  // e^tau
    // Original-variable grid and fields (x = Z / Zstar).
    std::vector<double> x;
    std::vector<double> rho_D;  // hat-density root, dampened
    std::vector<double> u_D;    // velocity, compactly supported past x = 10
    double K_infty = 0.0;       // n_P - 2(r-1)/(p-1)

    // Tail-change factors.
    double zeta(double x) const;
    double zeta_u(double x) const;
    // Renormalized fields: rho_D(tau, Z) = zeta(Z/Zstar) * rho_P(Z).
    double rho_renorm(double Z) const;
    double u_renorm(double Z) const;

    const PhysicalProfile* physical = nullptr;  // borrowed
    std::vector<double> zeta_table;             // I(x) on [5,10], fixed grid
};

// n_P must exceed 2(r-1)/(p-1); throws ProfileError("non-integrable-energy")
// otherwise. tau anchors Zstar = e^tau.
DampenedProfile dampen(const PhysicalProfile& physical, double n_P, double tau);

// ---------------------------------------------------------------------------
// Evaluator for the crossing-manifold continuation: the local power series
// of the trajectory through P2, parametrized by y = log Z. Valid in a
// neighborhood |y - y2| <~ 0.1; consumers needing clean fields just past the
// sonic point (the operator assembly) evaluate here instead of
// interpolating across the arc-to-tail junction of the sampled curve.
class ManifoldArc {
  public:
    explicit ManifoldArc(const ProfileCurve& curve);
    bool covers(double y) const;
    PhasePoint at_y(double y) const;
    double y2() const { return y2_; }

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    double y2_ = 0.0;
};

// ---------------------------------------------------------------------------
// Dense profile fields: the phase ODE re-integrated with forced stops at the
// requested radii (plus the origin series and the crossing-manifold series
// near their domains), so that finite-difference consumers see data smooth
// to the integration tolerance rather than to the interpolation error.
struct DenseFields {
    std::vector<double> Z;
    std::vector<double> w, sigma;
    std::vector<double> lam_w, lam_sigma;
    std::vector<double> rho, u;  // rho_P and U_P = Psi_P'
    std::vector<double> Psi;     // cumulative, Psi(0) = -1/(r-2)
};

DenseFields dense_profile_fields(const ProfileCurve& curve,
                                 const std::vector<double>& grid);

// ---------------------------------------------------------------------------
// Shared interpolation helper (4-point Lagrange on sorted abscissas).
double interp4(const std::vector<double>& xs, const std::vector<double>& ys,
               double x);

}  // namespace implode

#endif
