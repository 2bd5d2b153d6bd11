#include "implode/emden.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace implode {

Coefficients coefficients(const PhasePoint& pt, const Parameters& params, double r) {
    const double w = pt.w, s = pt.sigma, ell = params.ell, d = params.d;
    Coefficients c;
    c.a1 = w - 1.0;
    c.b1 = ell * s;
    c.d1 = w * w - r * w + ell * s * s;
    c.a2 = s / ell;
    c.b2 = w - 1.0;
    c.d2 = s * ((1.0 + d / ell) * w - r);
    return c;
}

Determinants determinants(const PhasePoint& pt, const Parameters& params, double r) {
    const double w = pt.w, s = pt.sigma, ell = params.ell, d = params.d;
    const double w_e = ell * (r - 1.0) / d;
    Determinants det;
    det.delta = (w - 1.0) * (w - 1.0) - s * s;
    det.delta1 = w * (w - 1.0) * (w - r) - d * (w - w_e) * s * s;
    det.delta2 = (s / ell) *
                 ((ell + d - 1.0) * w * w - w * (ell + d + ell * r - r) + ell * r -
                  ell * s * s);
    return det;
}

bool near_sonic(const Determinants& det, const PhasePoint& pt, double tol) {
    const double scale = 1.0 + pt.w * pt.w + pt.sigma * pt.sigma;
    return std::fabs(det.delta) < tol * scale;
}

std::array<double, 2> vector_field(const PhasePoint& pt, const Parameters& params,
                                   double r) {
    const Determinants det = determinants(pt, params, r);
    if (near_sonic(det, pt))
        throw SonicSingularity("vector field evaluated on the sonic line");
    return {-det.delta1 / det.delta, -det.delta2 / det.delta};
}

std::array<double, 2> grad_delta(const PhasePoint& pt) {
    return {2.0 * (pt.w - 1.0), -2.0 * pt.sigma};
}

std::array<double, 2> grad_delta1(const PhasePoint& pt, const Parameters& params,
                                  double r) {
    const double w = pt.w, s = pt.sigma, ell = params.ell, d = params.d;
    const double w_e = ell * (r - 1.0) / d;
    // Delta1 = w^3 - (1+r) w^2 + r w - d (w - w_e) s^2
    return {3.0 * w * w - 2.0 * (1.0 + r) * w + r - d * s * s,
            -2.0 * d * (w - w_e) * s};
}

std::array<double, 2> grad_delta2(const PhasePoint& pt, const Parameters& params,
                                  double r) {
    const double w = pt.w, s = pt.sigma, ell = params.ell, d = params.d;
    const double A = ell + d - 1.0, B = ell + d + ell * r - r, C = ell * r;
    // Delta2 = (s/ell) [A w^2 - B w + C - ell s^2]
    return {(s / ell) * (2.0 * A * w - B),
            (A * w * w - B * w + C - ell * s * s) / ell - 2.0 * s * s};
}

std::array<double, 3> hess_delta1(const PhasePoint& pt, const Parameters& params,
                                  double r) {
    const double w = pt.w, s = pt.sigma, d = params.d;
    const double ell = params.ell;
    const double w_e = ell * (r - 1.0) / d;
    return {6.0 * w - 2.0 * (1.0 + r), -2.0 * d * s, -2.0 * d * (w - w_e)};
}

std::array<double, 3> hess_delta2(const PhasePoint& pt, const Parameters& params,
                                  double r) {
    const double w = pt.w, s = pt.sigma, ell = params.ell, d = params.d;
    const double A = ell + d - 1.0, B = ell + d + ell * r - r;
    return {2.0 * A * s / ell, (2.0 * A * w - B) / ell, -6.0 * s};
}

double sonic_discriminant(const Parameters& params, double r) {
    const double d = params.d;
    const double w_e = params.ell * (r - 1.0) / d;
    const double qa = d - 1.0, qb = r - d - d * w_e, qc = d * w_e;
    return qb * qb - 4.0 * qa * qc;
}

std::vector<CriticalPoint> sonic_point_P2(const Parameters& params, double r) {
    const double d = params.d;
    const double w_e = params.ell * (r - 1.0) / d;
    const double qa = d - 1.0, qb = r - d - d * w_e, qc = d * w_e;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0)
        throw ParamError("no-sonic-root: negative discriminant on sigma = 1 - w");
    const double sq = std::sqrt(disc);
    // Stable quadratic roots.
    const double q = -0.5 * (qb + std::copysign(sq, qb));
    double w_a = q / qa;
    double w_b = (q != 0.0) ? qc / q : -qb / qa - w_a;
    if (w_a > w_b) std::swap(w_a, w_b);

    std::vector<CriticalPoint> out;
    for (double w : {w_a, w_b}) {
        CriticalPoint cp;
        cp.kind = CriticalKind::P2;
        cp.w = w;
        cp.sigma = 1.0 - w;
        out.push_back(cp);
    }
    return out;
}

CriticalPoint desingularized_jacobian(const CriticalPoint& point,
                                      const Parameters& params, double r) {
    const PhasePoint pt{point.w, point.sigma};
    const Determinants det = determinants(pt, params, r);
    const double scale = 1.0 + pt.w * pt.w + pt.sigma * pt.sigma;
    const double tol = 1e-7 * scale;
    if (std::fabs(det.delta) > tol || std::fabs(det.delta1) > tol ||
        std::fabs(det.delta2) > tol)
        throw ParamError("desingularized-jacobian: point is not critical");

    const auto g1 = grad_delta1(pt, params, r);
    const auto g2 = grad_delta2(pt, params, r);
    // Jacobian of (-Delta1, -Delta2).
    const double j11 = -g1[0], j12 = -g1[1];
    const double j21 = -g2[0], j22 = -g2[1];

    CriticalPoint out = point;
    const double tr = j11 + j22;
    const double dt = j11 * j22 - j12 * j21;
    const double disc = tr * tr / 4.0 - dt;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        out.eigenvalues = {tr / 2.0 - sq, tr / 2.0 + sq};
        out.eig_imag = {0.0, 0.0};
        out.complex_pair = false;
        for (int k = 0; k < 2; ++k) {
            const double lam = out.eigenvalues[k];
            // Row-based null vector of (J - lam I).
            double vx, vy;
            if (std::fabs(j12) > std::fabs(j21)) {
                vx = j12;
                vy = lam - j11;
            } else if (std::fabs(j21) > 0.0) {
                vx = lam - j22;
                vy = j21;
            } else {
                vx = (k == 0) ? 1.0 : 0.0;
                vy = (k == 0) ? 0.0 : 1.0;
            }
            const double nrm = std::hypot(vx, vy);
            out.eigvecs[k] = {vx / nrm, vy / nrm};
        }
    } else {
        out.eigenvalues = {tr / 2.0, tr / 2.0};
        out.eig_imag = {std::sqrt(-disc), -std::sqrt(-disc)};
        out.complex_pair = true;
    }
    return out;
}

namespace {

// Marching squares: emit the zero-level segments of f on one grid cell.
void cell_segments(double f00, double f10, double f01, double f11, double w0,
                   double w1, double s0, double s1, int locus_id,
                   std::vector<PortraitRow>& rows) {
    struct Pt {
        double w, s;
    };
    Pt pts[4];
    int np = 0;
    auto edge = [&](double fa, double fb, double wa, double sa, double wb,
                    double sb) {
        if ((fa < 0.0) == (fb < 0.0)) return;
        const double t = fa / (fa - fb);
        pts[np++] = {wa + t * (wb - wa), sa + t * (sb - sa)};
    };
    edge(f00, f10, w0, s0, w1, s0);
    edge(f10, f11, w1, s0, w1, s1);
    edge(f11, f01, w1, s1, w0, s1);
    edge(f01, f00, w0, s1, w0, s0);
    // Pair up crossings; ambiguous saddles just connect in discovery order.
    for (int i = 0; i + 1 < np; i += 2) {
        rows.push_back({pts[i].w, pts[i].s, 0.0, 0.0, locus_id});
        rows.push_back({pts[i + 1].w, pts[i + 1].s, 0.0, 0.0, locus_id});
    }
}

}  // namespace

Portrait portrait_sample(const Parameters& params, double r, const Window& window,
                         int n) {
    if (n < 2) throw ParamError("portrait grid must have n >= 2");
    Portrait out;
    const double dw = (window.w_max - window.w_min) / (n - 1);
    const double ds = (window.sigma_max - window.sigma_min) / (n - 1);

    // Normalized field directions on the grid.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double w = window.w_min + i * dw;
            const double s = window.sigma_min + j * ds;
            const Determinants det = determinants({w, s}, params, r);
            double fw = -det.delta1, fs = -det.delta2;
            const double nrm = std::hypot(fw, fs);
            if (nrm > 0.0) {
                fw /= nrm;
                fs /= nrm;
            }
            out.rows.push_back({w, s, fw, fs, 0});
        }
    }

    // Loci via marching squares on each scalar determinant.
    for (int which = 1; which <= 3; ++which) {
        for (int i = 0; i + 1 < n; ++i) {
            for (int j = 0; j + 1 < n; ++j) {
                const double w0 = window.w_min + i * dw, w1 = w0 + dw;
                const double s0 = window.sigma_min + j * ds, s1 = s0 + ds;
                auto val = [&](double w, double s) {
                    const Determinants det = determinants({w, s}, params, r);
                    return which == 1 ? det.delta
                           : which == 2 ? det.delta1
                                        : det.delta2;
                };
                cell_segments(val(w0, s0), val(w1, s0), val(w0, s1), val(w1, s1),
                              w0, w1, s0, s1, which, out.rows);
            }
        }
    }

    for (const auto& cp : sonic_point_P2(params, r)) {
        if (cp.w >= window.w_min && cp.w <= window.w_max &&
            cp.sigma >= window.sigma_min && cp.sigma <= window.sigma_max) {
            out.critical_points.push_back(cp);
            out.rows.push_back({cp.w, cp.sigma, 0.0, 0.0, 4});
        }
    }
    return out;
}

}  // namespace implode
