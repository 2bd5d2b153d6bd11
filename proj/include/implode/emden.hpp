// Autonomous (sigma, w) phase plane of the self-similar profile equation.
//
// In y = log Z the profile system reads
//     a1 w' + b1 sigma' + d1 = 0
//     a2 w' + b2 sigma' + d2 = 0
// and Cramer's rule gives w' = -Delta1/Delta, sigma' = -Delta2/Delta with
// Delta = (w-1)^2 - sigma^2 vanishing on the sonic lines sigma = +-(w-1).
// Smooth trajectories cross the sonic line only at points where all three
// determinants vanish simultaneously (the P2 point).

#ifndef IMPLODE_EMDEN_HPP
#define IMPLODE_EMDEN_HPP

#include <array>
#include <string>
#include <vector>

#include "implode/params.hpp"

namespace implode {

struct PhasePoint {
    double w = 0.0;
    double sigma = 0.0;
};

struct Coefficients {
    double a1, b1, d1;
    double a2, b2, d2;
};

struct Determinants {
    double delta;   // a1 b2 - b1 a2
    double delta1;  // -b1 d2 + b2 d1
    double delta2;  // d2 a1 - d1 a2
};

Coefficients coefficients(const PhasePoint& pt, const Parameters& params, double r);
Determinants determinants(const PhasePoint& pt, const Parameters& params, double r);

// Scale-invariant test for proximity to the sonic line.
bool near_sonic(const Determinants& det, const PhasePoint& pt,
                double tol = 1e-9);

// (dw/dy, dsigma/dy). Throws SonicSingularity when |Delta| is below the
// sonic tolerance; callers switch to desingularized stepping there.
struct SonicSingularity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
std::array<double, 2> vector_field(const PhasePoint& pt, const Parameters& params,
                                   double r);

// Analytic gradients of the determinants, for the desingularized Jacobian
// and for curvature limits at the crossing.
std::array<double, 2> grad_delta(const PhasePoint& pt);
std::array<double, 2> grad_delta1(const PhasePoint& pt, const Parameters& params, double r);
std::array<double, 2> grad_delta2(const PhasePoint& pt, const Parameters& params, double r);
// Hessians (constant-free second derivatives) of Delta1, Delta2: entries
// {f_ww, f_wsigma, f_sigmasigma}.
std::array<double, 3> hess_delta1(const PhasePoint& pt, const Parameters& params, double r);
std::array<double, 3> hess_delta2(const PhasePoint& pt, const Parameters& params, double r);

enum class CriticalKind { P2, P6, Other };

struct CriticalPoint {
    CriticalKind kind = CriticalKind::Other;
    double w = 0.0;
    double sigma = 0.0;
    // Eigen-data of the Jacobian of the desingularized field (-Delta1, -Delta2).
    std::array<double, 2> eigenvalues{0.0, 0.0};     // real parts if complex
    std::array<double, 2> eig_imag{0.0, 0.0};        // imaginary parts
    std::array<std::array<double, 2>, 2> eigvecs{};  // unit (w, sigma) tangents
    bool complex_pair = false;
    bool selected = false;  // trajectory-selected root, marked after shooting
};

// Roots of Delta1 restricted to the sonic branch sigma = 1 - w, 0 < w < 1.
// Factoring (1-w) out of Delta1 leaves the quadratic
//     (d-1) w^2 + (r - d - d w_e) w + d w_e = 0.
// Both roots are returned (ascending w); each satisfies
// Delta = Delta1 = Delta2 = 0. Throws ParamError("no-sonic-root") when the
// discriminant is negative.
std::vector<CriticalPoint> sonic_point_P2(const Parameters& params, double r);

// Discriminant of the sonic quadratic, for locating degenerate double roots.
double sonic_discriminant(const Parameters& params, double r);

// Eigen-data of d(-Delta1,-Delta2)/d(w,sigma) at a critical point. The point
// must satisfy Delta = Delta1 = Delta2 = 0 to tolerance; otherwise throws.
CriticalPoint desingularized_jacobian(const CriticalPoint& point,
                                      const Parameters& params, double r);

// Phase-portrait sampling: normalized field directions on an n x n grid plus
// marching-squares polylines for the loci Delta = 0, Delta1 = 0, Delta2 = 0.
struct PortraitRow {
    double w, sigma;
    double fw, fsigma;  // normalized (-Delta1, -Delta2); zero on loci rows
    int locus_id;       // 0 field sample, 1/2/3 locus Delta/Delta1/Delta2, 4 critical pt
};

struct Portrait {
    std::vector<PortraitRow> rows;
    std::vector<CriticalPoint> critical_points;
};

struct Window {
    double w_min, w_max;
    double sigma_min, sigma_max;
};

Portrait portrait_sample(const Parameters& params, double r, const Window& window,
                         int n);

}  // namespace implode

#endif
