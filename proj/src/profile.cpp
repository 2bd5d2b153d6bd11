#include "implode/profile.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "implode/fit.hpp"
#include "implode/ode.hpp"

namespace implode {

// ---------------------------------------------------------------------------
// Origin series

OriginSeries origin_series(const Parameters& params, double r, int order) {
    if (order < 4) throw ProfileError("origin series order must be >= 4");
    if (!(r > 1.0)) throw ProfileError("origin series requires r > 1");
    if (std::fabs(r - 2.0) < 1e-6)
        throw ProfileError("gauge-singularity: Psi_P(0) = -1/(r-2) diverges");

    const int K = order / 2;
    const double d = params.d, p = params.p;

    OriginSeries s;
    s.r = r;
    s.psi.assign(K + 1, 0.0);
    s.g.assign(K + 1, 0.0);
    s.psi[0] = -1.0 / (r - 2.0);
    s.g[0] = 1.0;

    // mu = rho'/rho (odd series, coefficient of Z^{2m-1}) and q = rho^{p-1}
    // grow together with the main recursion.
    std::vector<double> mu(K + 1, 0.0);
    std::vector<double> q(K + 1, 0.0);
    q[0] = 1.0;

    const double ell = params.ell;
    for (int k = 1; k <= K; ++k) {
        // psi[k] from the divergence equation at order Z^{2k-2}:
        //   2k(2k+d-2) psi_k + (ell(r-1)/2) delta_{k,1}
        //     + [(2 Psi' + Z) rho'/rho]_{2k-2} = 0
        double forcing = (k == 1) ? 0.5 * ell * (r - 1.0) : 0.0;
        for (int i = 1; i <= k - 1; ++i) {
            const int m = k - i;
            const double c_i = (i == 1) ? (4.0 * s.psi[1] + 1.0) : 4.0 * i * s.psi[i];
            forcing += c_i * mu[m];
        }
        s.psi[k] = -forcing / (2.0 * k * (2.0 * k + d - 2.0));

        // [(Psi')^2]_{2k} = sum_{i+j=k+1, i,j>=1} 4 i j psi_i psi_j
        double dpsi_sq = 0.0;
        for (int i = 1; i <= k; ++i) {
            const int j = k + 1 - i;
            if (j >= 1 && j <= K) dpsi_sq += 4.0 * i * j * s.psi[i] * s.psi[j];
        }

        // [rho^{p-1}]_{2k} without the g_k part:
        //   2k q_k = (p-1) sum_{m} 2m g_m q_{k-m} - sum_{n} 2n q_n g_{k-n}
        double qk_partial = 0.0;
        for (int m = 1; m <= k - 1; ++m)
            qk_partial += (p - 1.0) * 2.0 * m * s.g[m] * q[k - m];
        for (int n = 1; n <= k - 1; ++n) qk_partial -= 2.0 * n * q[n] * s.g[k - n];
        qk_partial /= 2.0 * k;

        // Bernoulli equation at order Z^{2k}:
        //   (r-2+2k) psi_k + q_k + dpsi_sq = 0 with q_k = qk_partial + (p-1) g_k
        s.g[k] = -((r - 2.0 + 2.0 * k) * s.psi[k] + qk_partial + dpsi_sq) / (p - 1.0);
        q[k] = qk_partial + (p - 1.0) * s.g[k];

        // Extend mu: 2k g_k = sum_{j=0..k-1} mu_{k-j} g_j with g_0 = 1.
        double acc = 2.0 * k * s.g[k];
        for (int j = 1; j <= k - 1; ++j) acc -= mu[k - j] * s.g[j];
        mu[k] = acc;
    }
    return s;
}

double OriginSeries::psi_at(double Z) const {
    const double u = Z * Z;
    double v = 0.0;
    for (int k = (int)psi.size() - 1; k >= 0; --k) v = v * u + psi[k];
    return v;
}

double OriginSeries::dpsi_at(double Z) const {
    const double u = Z * Z;
    double v = 0.0;
    for (int k = (int)psi.size() - 1; k >= 1; --k) v = v * u + 2.0 * k * psi[k];
    return v * Z;
}

double OriginSeries::rho_at(double Z) const {
    const double u = Z * Z;
    double v = 0.0;
    for (int k = (int)g.size() - 1; k >= 0; --k) v = v * u + g[k];
    return v;
}

double OriginSeries::drho_at(double Z) const {
    const double u = Z * Z;
    double v = 0.0;
    for (int k = (int)g.size() - 1; k >= 1; --k) v = v * u + 2.0 * k * g[k];
    return v * Z;
}

PhasePoint OriginSeries::phase_at(double Z, const Parameters& params) const {
    const double phi = 0.5 * std::sqrt(params.ell);
    const double w = -2.0 * dpsi_at(Z) / Z;
    const double sigma = std::pow(rho_at(Z), 0.5 * (params.p - 1.0)) / (phi * Z);
    return {w, sigma};
}

double OriginSeries::residual(double Z, const Parameters& params) const {
    const double d = params.d, p = params.p, ell = params.ell;
    const double u = Z * Z;
    const double psiv = psi_at(Z), dpsi = dpsi_at(Z), rho = rho_at(Z),
                 drho = drho_at(Z);
    double ddpsi = 0.0;
    for (int k = (int)psi.size() - 1; k >= 1; --k)
        ddpsi = ddpsi * u + 2.0 * k * (2.0 * k - 1.0) * psi[k];
    const double lap_psi = ddpsi + (d - 1.0) * dpsi / Z;
    const double res1 =
        dpsi * dpsi + std::pow(rho, p - 1.0) + (r - 2.0) * psiv + Z * dpsi;
    const double res2 =
        lap_psi + ell * (r - 1.0) / 2.0 + (2.0 * dpsi + Z) * drho / rho;
    return std::max(std::fabs(res1), std::fabs(res2));
}

// ---------------------------------------------------------------------------
// Integration to the sonic line

namespace {

// Signed distance along the sonic line sigma = 1 - w from the projection of
// pt to the reference root; positive toward larger w.
double sonic_miss(const PhasePoint& pt, const CriticalPoint& root) {
    return ((pt.w - root.w) - (pt.sigma - root.sigma)) / std::sqrt(2.0);
}

}  // namespace

SonicRun integrate_to_sonic(const Parameters& params, double r,
                            const IntegrateOptions& opt) {
    const OriginSeries series = origin_series(params, r, opt.series_order);
    const auto roots = sonic_point_P2(params, r);

    RK45<2> solver;
    solver.rtol = opt.rtol;
    solver.atol = opt.atol;

    // Z-form of the phase ODE; diverges on the sonic line.
    auto rhs = [&](double Z, const std::array<double, 2>& y) {
        const Determinants det = determinants({y[0], y[1]}, params, r);
        return std::array<double, 2>{-det.delta1 / (Z * det.delta),
                                     -det.delta2 / (Z * det.delta)};
    };

    SonicRun run;
    double Z = opt.Z0;
    PhasePoint p0 = series.phase_at(Z, params);
    std::array<double, 2> y{p0.w, p0.sigma};
    bool crossed_line = false;

    auto record = [&](double Zc, const std::array<double, 2>& st) {
        if (!opt.record) return;
        const Determinants det = determinants({st[0], st[1]}, params, r);
        CurveSample cs;
        cs.y = std::log(Zc);
        cs.Z = Zc;
        cs.w = st[0];
        cs.sigma = st[1];
        cs.lam_w = -det.delta1 / det.delta;
        cs.lam_sigma = -det.delta2 / det.delta;
        cs.lam2_w = cs.lam2_sigma = 0.0;
        run.samples.push_back(cs);
    };
    record(Z, y);

    double best_dist = std::numeric_limits<double>::max();
    PhasePoint best_pt = p0;
    double best_Z = Z;
    auto update_closest = [&](double Zc, const std::array<double, 2>& st) {
        const double dist = std::fabs(st[1] - (1.0 - st[0]));
        if (dist < best_dist) {
            best_dist = dist;
            best_pt = {st[0], st[1]};
            best_Z = Zc;
        }
    };
    update_closest(Z, y);

    double h = 1e-2 * opt.Z0;
    bool underflow = false;
    while (Z < opt.Z_cap) {
        const Determinants det = determinants({y[0], y[1]}, params, r);
        if (near_sonic(det, {y[0], y[1]}, opt.sonic_tol)) {
            run.met_sonic = true;
            break;
        }
        if (h < 1e-14 * std::max(Z, 1.0)) {
            // Step collapse: expected termination when the sonic line is hit
            // transversally and the error target cannot be met.
            underflow = true;
            run.met_sonic =
                best_dist < 1e-5 * (1.0 + y[0] * y[0] + y[1] * y[1]);
            break;
        }
        double t = Z;
        auto res = solver.try_step(rhs, t, y, std::min(h, opt.Z_cap - Z + 1e-9));
        h = res.h_next;
        if (!res.accepted) continue;
        Z = t;
        record(Z, y);
        update_closest(Z, y);
        if (y[1] - (1.0 - y[0]) < -1e-3) crossed_line = true;
        if (!std::isfinite(y[0]) || !std::isfinite(y[1])) break;
    }

    run.final_point = {y[0], y[1]};
    run.Z_final = Z;

    // Classification. The origin trajectory funnels along the sonic line into
    // the lower root; the discriminating observable is the exit behavior:
    // trajectories either cross and swing down to the P6 end (w below the
    // root) or creep upward along the line / hang inside (w at or above it).
    for (int k = 0; k < 2; ++k) {
        SonicApproach ap;
        ap.root_index = k;
        ap.closest = best_pt;
        ap.Z_closest = best_Z;
        const double dist =
            std::hypot(best_pt.w - roots[k].w, best_pt.sigma - roots[k].sigma);
        if (run.met_sonic) {
            // Stalled on the line creeping toward larger w: "above" side.
            ap.outcome = SonicOutcome::HitsSonicAbove;
            ap.miss = dist;
        } else if (crossed_line && run.final_point.w < 0.5 * roots[k].w) {
            // Crossed and swung down toward P6: "below" side.
            ap.outcome = SonicOutcome::HitsSonicBelow;
            ap.miss = -dist;
        } else if (best_dist < 1e-2) {
            // Reached the line region but hung inside or crossed without the
            // downward swing within Z_cap.
            ap.outcome = underflow ? SonicOutcome::StepUnderflow
                                   : SonicOutcome::HitsSonicAbove;
            ap.miss = dist;
        } else {
            ap.outcome = SonicOutcome::NoSonicEncounter;
            ap.miss = sonic_miss(best_pt, roots[k]);
        }
        run.approach[k] = ap;
    }
    return run;
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

ShootOptions with_defaults(const Parameters& params, ShootOptions opt) {
    if (opt.r_lo <= 0.0) opt.r_lo = 1.0 + 1e-2;
    // The passage through P2 degenerates as r -> r_eye (the slow eigenvalue
    // of the desingularized node vanishes there and transit times diverge),
    // so the scan stays clear of the last millish of the bracket.
    if (opt.r_hi <= 0.0) opt.r_hi = params.r_eye - 1e-3;
    return opt;
}

}  // namespace

std::vector<ShootResult> shoot_speed_scan(const Parameters& params,
                                          const ShootOptions& opt_in) {
    const ShootOptions opt = with_defaults(params, opt_in);
    IntegrateOptions integ = opt.integ;
    integ.record = false;

    struct ScanPoint {
        double r;
        bool usable[2];
        double miss[2];
    };
    auto classify = [&](double r, ScanPoint& sp) {
        const SonicRun run = integrate_to_sonic(params, r, integ);
        sp.r = r;
        for (int k = 0; k < 2; ++k) {
            const auto& ap = run.approach[k];
            sp.usable[k] = ap.outcome == SonicOutcome::HitsSonicAbove ||
                           ap.outcome == SonicOutcome::HitsSonicBelow;
            sp.miss[k] = ap.miss;
        }
    };
    std::vector<ScanPoint> scan(opt.scan_points + 1);
    for (int i = 0; i <= opt.scan_points; ++i)
        classify(opt.r_lo + (opt.r_hi - opt.r_lo) * i / opt.scan_points, scan[i]);

    std::vector<ShootResult> found;
    for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
        for (int k = 0; k < 2; ++k) {
            if (!scan[i].usable[k] || !scan[i + 1].usable[k]) continue;
            if ((scan[i].miss[k] < 0.0) == (scan[i + 1].miss[k] < 0.0)) continue;
            double lo = scan[i].r, hi = scan[i + 1].r;
            double f_lo = scan[i].miss[k];
            double miss_mid = f_lo;
            while (hi - lo > opt.tol_r) {
                const double mid = 0.5 * (lo + hi);
                ScanPoint sp;
                classify(mid, sp);
                if (!sp.usable[k]) break;
                miss_mid = sp.miss[k];
                if ((miss_mid < 0.0) == (f_lo < 0.0)) {
                    lo = mid;
                    f_lo = miss_mid;
                } else {
                    hi = mid;
                }
            }
            ShootResult res;
            res.r = 0.5 * (lo + hi);
            res.miss = miss_mid;
            res.root_index = k;
            res.bracket_lo = scan[i].r;
            res.bracket_hi = scan[i + 1].r;
            if (std::fabs(res.miss) < opt.miss_tol) found.push_back(res);
        }
    }
    std::sort(found.begin(), found.end(),
              [](const ShootResult& a, const ShootResult& b) { return a.r < b.r; });
    return found;
}

ShootResult shoot_speed(const Parameters& params, double r_lo, double r_hi,
                        const ShootOptions& opt_in) {
    ShootOptions opt = opt_in;
    opt.r_lo = r_lo;
    opt.r_hi = r_hi;
    opt.scan_points = 1;
    auto res = shoot_speed_scan(params, opt);
    if (res.empty())
        throw ProfileError("no-root-in-bracket: classifications agree at both ends");
    return res.front();
}

// ---------------------------------------------------------------------------
// Crossing, tail, post-processing

namespace {

// Chain-rule second logarithmic derivatives along the trajectory:
// Lambda^2 = (dV/d(w,sigma)) . (Lambda w, Lambda sigma), V = (-D1/D, -D2/D).
std::array<double, 2> lambda2_chain(const PhasePoint& pt, const Parameters& params,
                                    double r) {
    const Determinants det = determinants(pt, params, r);
    const auto gD = grad_delta(pt);
    const auto g1 = grad_delta1(pt, params, r);
    const auto g2 = grad_delta2(pt, params, r);
    const double D = det.delta;
    const double lw = -det.delta1 / D, ls = -det.delta2 / D;
    const double vw_w = (-g1[0] * D + det.delta1 * gD[0]) / (D * D);
    const double vw_s = (-g1[1] * D + det.delta1 * gD[1]) / (D * D);
    const double vs_w = (-g2[0] * D + det.delta2 * gD[0]) / (D * D);
    const double vs_s = (-g2[1] * D + det.delta2 * gD[1]) / (D * D);
    return {vw_w * lw + vw_s * ls, vs_w * lw + vs_s * ls};
}

struct CrossState {
    double y_new;
    PhasePoint pt_new;
    CrossingInfo info;
};

CrossState cross_at_p2(const Parameters& params, double r, int root_index,
                       double y_in, const PhasePoint& p_in, double rel_step) {
    const auto roots = sonic_point_P2(params, r);
    const CriticalPoint eig = desingularized_jacobian(roots[root_index], params, r);
    if (eig.complex_pair)
        throw ProfileError("crossing-failed: complex eigenvalues at P2");

    const PhasePoint p2{eig.w, eig.sigma};
    const std::array<double, 2> incoming{p_in.w - p2.w, p_in.sigma - p2.sigma};

    // The limit velocity along an eigendirection v is J v / (grad Delta . v),
    // identical on both sides of P2. Select the eigendirection aligned with
    // the incoming offset.
    const auto gD = grad_delta(p2);
    int best = -1;
    double best_align = -1.0;
    for (int k = 0; k < 2; ++k) {
        const auto& v = eig.eigvecs[k];
        const double denom = gD[0] * v[0] + gD[1] * v[1];
        if (std::fabs(denom) < 1e-12) continue;
        const double in_norm = std::hypot(incoming[0], incoming[1]);
        double align = 1.0;
        if (in_norm > 1e-13)
            align = std::fabs((incoming[0] * v[0] + incoming[1] * v[1]) / in_norm);
        if (align > best_align) {
            best_align = align;
            best = k;
        }
    }
    if (best < 0) throw ProfileError("crossing-failed: degenerate eigenbasis");

    const auto& v = eig.eigvecs[best];
    const double lam = eig.eigenvalues[best];
    const double denom = gD[0] * v[0] + gD[1] * v[1];
    const std::array<double, 2> limit{lam * v[0] / denom, lam * v[1] / denom};
    const double speed = std::hypot(limit[0], limit[1]);
    if (!(speed > 0.0))
        throw ProfileError("crossing-failed: zero limit velocity at P2");

    // Unit direction of motion; y increases through the crossing.
    const std::array<double, 2> uhat{limit[0] / speed, limit[1] / speed};
    const double eps_in = -(incoming[0] * uhat[0] + incoming[1] * uhat[1]);
    if (eps_in < -1e-12)
        throw ProfileError("crossing-failed: trajectory is already past P2");

    // Quadratic term of the invariant manifold through P2 tangent to uhat:
    // xi(eta) = eta u + eta^2 c / 2 with c = c_n * n from the tangency
    // condition c_n [lambda + (J n x u)/2] = -(H[u,u] x u)/2.
    const std::array<double, 2> nhat{-uhat[1], uhat[0]};
    const auto h1 = hess_delta1(p2, params, r);
    const auto h2 = hess_delta2(p2, params, r);
    auto quad = [&](const std::array<double, 3>& h) {
        return h[0] * uhat[0] * uhat[0] + 2.0 * h[1] * uhat[0] * uhat[1] +
               h[2] * uhat[1] * uhat[1];
    };
    // Field is (-Delta1, -Delta2); Hessian quadratic forms pick up the sign.
    const std::array<double, 2> Huu{-quad(h1), -quad(h2)};
    const auto g1p = grad_delta1(p2, params, r);
    const auto g2p = grad_delta2(p2, params, r);
    // J n with J = -[grad Delta1; grad Delta2]
    const std::array<double, 2> Jn{-(g1p[0] * nhat[0] + g1p[1] * nhat[1]),
                                   -(g2p[0] * nhat[0] + g2p[1] * nhat[1])};
    auto cross2 = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
        return a[0] * b[1] - a[1] * b[0];
    };
    const double denom_c = lam + 0.5 * cross2(Jn, uhat);
    const double c_n =
        (std::fabs(denom_c) > 1e-10) ? -0.5 * cross2(Huu, uhat) / denom_c : 0.0;

    const double scale = 1.0 + std::hypot(p2.w, p2.sigma);
    const double delta_out = std::max(rel_step * scale, 2.0 * std::fabs(eps_in));

    CrossState st;
    st.info.w2 = p2.w;
    st.info.sigma2 = p2.sigma;
    st.info.direction = uhat;
    st.info.eigenvalue = lam;
    st.info.lam_limit = limit;
    st.info.root_index = root_index;
    st.info.eig = eig;
    st.info.eig.selected = true;
    st.info.y2 = y_in + std::max(eps_in, 0.0) / speed;
    st.info.Z2 = std::exp(st.info.y2);
    st.y_new = y_in + (std::max(eps_in, 0.0) + delta_out) / speed;
    const double q = 0.5 * delta_out * delta_out * c_n;
    st.pt_new = {p2.w + delta_out * uhat[0] + q * nhat[0],
                 p2.sigma + delta_out * uhat[1] + q * nhat[1]};
    return st;
}

// Power-series continuation of the trajectory along the slow invariant
// manifold of the desingularized field at P2. In the orthonormal frame
// (u, n) centered at P2 the manifold is the graph b(s) = sum_k beta_k s^k;
// the invariance condition fixes beta_k = -g_k / (lambda1 - k lambda0),
// which degenerates at the resonance k ~ lambda1/lambda0. The series is
// truncated before the first small denominator.
struct ManifoldSeries {
    PhasePoint p2;
    std::array<double, 2> u, n;  // orthonormal frame, u = motion direction
    std::vector<double> beta;    // beta[k] multiplies s^k, k >= 2
    int order = 0;

    PhasePoint point_at(double s) const {
        double b = 0.0;
        for (int k = order; k >= 2; --k) b = b * s + beta[k];
        b *= s * s;
        return {p2.w + s * u[0] + b * n[0], p2.sigma + s * u[1] + b * n[1]};
    }
};

ManifoldSeries manifold_series(const Parameters& params, double r,
                               const CrossingInfo& info, int max_order = 6) {
    ManifoldSeries ms;
    ms.p2 = {info.w2, info.sigma2};
    ms.u = info.direction;
    ms.n = {-ms.u[1], ms.u[0]};

    const double lam0 = info.eigenvalue;  // eigenvalue along the crossing
    const double lam1 = info.eig.eigenvalues[0] + info.eig.eigenvalues[1] - lam0;

    auto N_components = [&](double a, double b) {
        const PhasePoint pt{ms.p2.w + a * ms.u[0] + b * ms.n[0],
                            ms.p2.sigma + a * ms.u[1] + b * ms.n[1]};
        const Determinants det = determinants(pt, params, r);
        const double Nw = -det.delta1, Ns = -det.delta2;
        return std::array<double, 2>{Nw * ms.u[0] + Ns * ms.u[1],
                                     Nw * ms.n[0] + Ns * ms.n[1]};
    };

    ms.beta.assign(max_order + 1, 0.0);
    ms.order = 1;
    for (int k = 2; k <= max_order; ++k) {
        const double denom = lam1 - k * lam0;
        if (std::fabs(denom) < 0.1 * std::fabs(lam1)) break;  // resonance guard
        auto residual = [&](double a) {
            double b = 0.0, db = 0.0;
            for (int j = ms.order; j >= 2; --j) {
                b = b * a + ms.beta[j];
                db = db * a + j * ms.beta[j];
            }
            b *= a * a;
            db *= a;
            const auto Nc = N_components(a, b);
            return Nc[1] - db * Nc[0];
        };
        const double h = 0.02;
        const double A1 = residual(h) / std::pow(h, k);
        const double A2 = residual(h / 2) / std::pow(h / 2, k);
        const double gk = 2.0 * A2 - A1;  // Richardson in h
        ms.beta[k] = -gk / denom;
        ms.order = k;
    }
    return ms;
}

// Outgoing manifold-arc extent in y = log Z shared by the curve builder and
// the dense-field evaluator, so both continue the tail from the same state.
constexpr double kArcYSpan = 0.03;

// y(s) along the manifold arc by cumulative Simpson from P2 (s of either
// sign), plus inversion to s(y).
struct ArcParam {
    std::vector<double> s, y;  // ascending in s; y increasing

    double s_of_y(double yq) const {
        // 4-point Lagrange inversion; a piecewise-linear read-off would tilt
        // the sampled arc's apparent slope at the table-cell scale.
        return interp4(y, s, yq);
    }
};

ArcParam arc_parametrization(const Parameters& params, double r,
                             const ManifoldSeries& ms, const CrossingInfo& info,
                             double s_span) {
    auto dyds = [&](double s) {
        const PhasePoint pt = ms.point_at(s);
        const Determinants det = determinants(pt, params, r);
        const double Nw = -det.delta1, Ns = -det.delta2;
        const double Nu = Nw * ms.u[0] + Ns * ms.u[1];
        if (s == 0.0) {
            const auto gD = grad_delta({ms.p2.w, ms.p2.sigma});
            return (gD[0] * ms.u[0] + gD[1] * ms.u[1]) / info.eigenvalue;
        }
        return det.delta / Nu;
    };
    const int n_half = 2000;
    const double ds = s_span / n_half;
    ArcParam ap;
    ap.s.resize(2 * n_half + 1);
    ap.y.resize(2 * n_half + 1);
    ap.s[n_half] = 0.0;
    ap.y[n_half] = info.y2;
    for (int i = 1; i <= n_half; ++i) {
        // outward
        const double sa = (i - 1) * ds, sb = i * ds, sm = 0.5 * (sa + sb);
        const double seg = ds / 6.0 * (dyds(sa) + 4.0 * dyds(sm) + dyds(sb));
        ap.s[n_half + i] = sb;
        ap.y[n_half + i] = ap.y[n_half + i - 1] + seg;
        // inward
        const double sa2 = -(i - 1) * ds, sb2 = -i * ds, sm2 = 0.5 * (sa2 + sb2);
        const double seg2 = ds / 6.0 * (dyds(sa2) + 4.0 * dyds(sm2) + dyds(sb2));
        ap.s[n_half - i] = sb2;
        ap.y[n_half - i] = ap.y[n_half - i + 1] - seg2;
    }
    return ap;
}

// Adaptive integration of the y-form phase ODE with forced stops; emit is
// called exactly at each requested y (ascending).
void integrate_with_stops(const Parameters& params, double r, double y,
                          std::array<double, 2> state,
                          const std::vector<double>& y_targets,
                          const std::function<void(double, const std::array<double, 2>&)>&
                              emit) {
    RK45<2> solver;
    solver.rtol = 1e-11;
    solver.atol = 1e-13;
    auto rhs_y = [&](double, const std::array<double, 2>& st) {
        const Determinants det = determinants({st[0], st[1]}, params, r);
        return std::array<double, 2>{-det.delta1 / det.delta,
                                     -det.delta2 / det.delta};
    };
    double h = 1e-4;
    for (double target : y_targets) {
        if (target <= y + 1e-15) {
            emit(y, state);
            continue;
        }
        while (y < target - 1e-14) {
            double t = y;
            auto res = solver.try_step(rhs_y, t, state, std::min(h, target - y));
            h = res.h_next;
            if (!res.accepted) {
                if (res.h_used < 1e-15)
                    throw ProfileError("dense fields: integration stalled");
                continue;
            }
            y = t;
        }
        emit(y, state);
    }
}

// Tail integration in y = log Z from the post-crossing landing state.
std::vector<CurveSample> integrate_tail_samples(const Parameters& params, double r,
                                                const CrossState& st,
                                                const TailOptions& tail) {
    RK45<2> solver;
    solver.rtol = 1e-10;
    solver.atol = 1e-12;
    auto rhs_y = [&](double /*y*/, const std::array<double, 2>& st2) {
        const Determinants det = determinants({st2[0], st2[1]}, params, r);
        return std::array<double, 2>{-det.delta1 / det.delta,
                                     -det.delta2 / det.delta};
    };

    std::vector<CurveSample> out;
    const double y_max = std::log(tail.Z_max_factor * st.info.Z2);
    double y = st.y_new;
    std::array<double, 2> state{st.pt_new.w, st.pt_new.sigma};
    double h = 1e-6;
    while (y < y_max) {
        // Step cap keeps the sample grid dense enough for downstream
        // interpolation (tight through the near-field swing region).
        const double h_cap = (y < st.info.y2 + 2.0) ? 5e-3 : 5e-2;
        double t = y;
        auto res =
            solver.try_step(rhs_y, t, state, std::min({h, h_cap, y_max - y}));
        h = res.h_next;
        if (!res.accepted) {
            if (res.h_used < 1e-14) throw ProfileError("tail integration stalled");
            continue;
        }
        y = t;
        const Determinants det = determinants({state[0], state[1]}, params, r);
        CurveSample cs;
        cs.y = y;
        cs.Z = std::exp(y);
        cs.w = state[0];
        cs.sigma = state[1];
        cs.lam_w = -det.delta1 / det.delta;
        cs.lam_sigma = -det.delta2 / det.delta;
        cs.lam2_w = cs.lam2_sigma = 0.0;
        out.push_back(cs);
        if (state[1] <= 0.0)
            throw ProfileError("wrong-branch: sigma crossed zero in the tail");
    }
    return out;
}

}  // namespace

ProfileCurve build_curve_at_speed(const Parameters& params, const ShootResult& root,
                                  const ProfileOptions& opt) {
    const double r = root.r;
    IntegrateOptions integ = opt.shoot.integ;
    integ.record = true;

    SonicRun run = integrate_to_sonic(params, r, integ);

    ProfileCurve curve;
    curve.params = params.with_speed(r);
    curve.r = r;
    curve.miss = run.approach[root.root_index].miss;
    curve.samples = std::move(run.samples);

    // Locate the closest approach to the selected root; the incoming branch
    // ends there and the eigendirection continuation takes over.
    const auto p2_roots = sonic_point_P2(params, r);
    const auto& p2 = p2_roots[root.root_index];
    double dmin = std::numeric_limits<double>::max();
    std::size_t imin = 0;
    for (std::size_t i = 0; i < curve.samples.size(); ++i) {
        const auto& smp = curve.samples[i];
        const double dist = std::hypot(smp.w - p2.w, smp.sigma - p2.sigma);
        if (dist < dmin) {
            dmin = dist;
            imin = i;
        }
    }
    if (dmin > 1e-4)
        throw ProfileError("crossing-failed: trajectory did not reach P2");
    curve.samples.resize(imin + 1);

    // Drop samples inside the near-sonic funnel; the crossing inserts the
    // exact P2 sample instead.
    while (!curve.samples.empty()) {
        const auto& last = curve.samples.back();
        const double dist = std::hypot(last.w - p2.w, last.sigma - p2.sigma);
        const Determinants det = determinants({last.w, last.sigma}, params, r);
        const double sc = 1.0 + last.w * last.w + last.sigma * last.sigma;
        if (dist < 1e-5 * sc || std::fabs(det.delta) < 1e3 * integ.sonic_tol * sc)
            curve.samples.pop_back();
        else
            break;
    }
    if (curve.samples.empty())
        throw ProfileError("crossing-failed: no usable samples before P2");

    const CurveSample last = curve.samples.back();
    CrossState st = cross_at_p2(params, r, root.root_index, last.y,
                                {last.w, last.sigma}, opt.cross_step);
    curve.crossing = st.info;
    curve.Z2 = st.info.Z2;

    CurveSample p2s;
    p2s.y = st.info.y2;
    p2s.Z = st.info.Z2;
    p2s.w = st.info.w2;
    p2s.sigma = st.info.sigma2;
    p2s.lam_w = st.info.lam_limit[0];
    p2s.lam_sigma = st.info.lam_limit[1];
    p2s.lam2_w = p2s.lam2_sigma = 0.0;
    curve.samples.push_back(p2s);
    curve.i_cross = curve.samples.size() - 1;

    // Outgoing arc on the slow-manifold series, far enough past Z2 to cover
    // the shifted sonic radii Z_a of downstream consumers; then the regular
    // integration takes over in a fully non-degenerate region.
    const ManifoldSeries ms = manifold_series(params, r, st.info);
    const ArcParam ap = arc_parametrization(params, r, ms, st.info, 0.06);
    {
        const int n_arc = 240;
        for (int j = 1; j <= n_arc; ++j) {
            const double y = st.info.y2 + kArcYSpan * j / n_arc;
            const double s = ap.s_of_y(y);
            const PhasePoint pt = ms.point_at(s);
            const Determinants det = determinants(pt, params, r);
            CurveSample cs;
            cs.y = y;
            cs.Z = std::exp(y);
            cs.w = pt.w;
            cs.sigma = pt.sigma;
            cs.lam_w = -det.delta1 / det.delta;
            cs.lam_sigma = -det.delta2 / det.delta;
            cs.lam2_w = cs.lam2_sigma = 0.0;
            curve.samples.push_back(cs);
        }
        st.y_new = curve.samples.back().y;
        st.pt_new = {curve.samples.back().w, curve.samples.back().sigma};
    }

    // The series truncation leaves a tiny transverse residual at the arc end
    // whose sign decides which side of the slow manifold the continuation
    // peels toward; if it peels into the sonic line, nudge across by the
    // smallest transverse offset that lets the tail reach the far field.
    std::vector<CurveSample> tail_samples;
    bool tail_ok = false;
    for (double nudge : {0.0, -1e-9, -1e-8, -1e-7, -1e-6, -1e-5, -1e-4, -1e-3,
                         1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3}) {
        CrossState st_try = st;
        st_try.pt_new.w += nudge * ms.n[0];
        st_try.pt_new.sigma += nudge * ms.n[1];
        try {
            tail_samples = integrate_tail_samples(params, r, st_try, opt.tail);
            curve.crossing.tail_nudge = nudge;
            tail_ok = true;
            break;
        } catch (const ProfileError&) {
            continue;
        }
    }
    if (!tail_ok)
        throw ProfileError("crossing-failed: tail never reached the far field");
    // Drop tail samples nearly coincident with the arc end; near-duplicate
    // abscissas make the downstream Lagrange interpolation oscillate.
    {
        const double y_gap = st.y_new + 2.5e-4;
        std::size_t skip = 0;
        while (skip < tail_samples.size() && tail_samples[skip].y < y_gap) ++skip;
        curve.samples.insert(curve.samples.end(), tail_samples.begin() + skip,
                             tail_samples.end());
    }

    // ---- Post-processing ----
    // Second logarithmic derivatives by the chain rule. The trimming above
    // guarantees |Delta| >~ 1e-6 on every kept sample, where the formula is
    // still accurate; only the inserted P2 sample needs a limit value.
    for (std::size_t i = 0; i < curve.samples.size(); ++i) {
        if (i == curve.i_cross) continue;
        auto& smp = curve.samples[i];
        const auto l2 = lambda2_chain({smp.w, smp.sigma}, params, r);
        smp.lam2_w = l2[0];
        smp.lam2_sigma = l2[1];
    }
    {
        // Linear-in-y extrapolation of Lambda^2 to y2 from each side.
        auto side_fit = [&](bool incoming, double CurveSample::*field) {
            std::vector<double> ts, fs;
            const std::size_t take = 6;
            if (incoming) {
                for (std::size_t i = curve.i_cross; i-- > 0 && ts.size() < take;) {
                    ts.push_back(curve.samples[i].y - curve.crossing.y2);
                    fs.push_back(curve.samples[i].*field);
                }
            } else {
                for (std::size_t i = curve.i_cross + 1;
                     i < curve.samples.size() && ts.size() < take; ++i) {
                    ts.push_back(curve.samples[i].y - curve.crossing.y2);
                    fs.push_back(curve.samples[i].*field);
                }
            }
            const LinFit f = linear_fit(ts, fs);
            return f.intercept;
        };
        curve.crossing.lam2_limit = {
            0.5 * (side_fit(true, &CurveSample::lam2_w) +
                   side_fit(false, &CurveSample::lam2_w)),
            0.5 * (side_fit(true, &CurveSample::lam2_sigma) +
                   side_fit(false, &CurveSample::lam2_sigma))};
        curve.samples[curve.i_cross].lam2_w = curve.crossing.lam2_limit[0];
        curve.samples[curve.i_cross].lam2_sigma = curve.crossing.lam2_limit[1];
    }

    // Tail exponents and constants on a fixed log-spaced resample of the
    // last decade (insensitive to the adaptive step sequence).
    {
        const double Zt_hi = curve.samples.back().Z * 0.999;
        const double Zt_lo = Zt_hi / 10.0;
        std::vector<double> Zs, ws, ss;
        const int n_fit = 200;
        for (int i = 0; i < n_fit; ++i) {
            const double Zq =
                Zt_lo * std::pow(Zt_hi / Zt_lo, double(i) / (n_fit - 1));
            Zs.push_back(Zq);
            ws.push_back(curve.w_at(Zq));
            ss.push_back(curve.sigma_at(Zq));
        }
        const LinFit fw2 = loglog_fit(Zs, ws);
        const LinFit fs2 = loglog_fit(Zs, ss);
        curve.tail_slope_w = fw2.slope;
        curve.tail_slope_sigma = fs2.slope;
        curve.c_w = std::copysign(std::exp(fw2.intercept), ws.back());
        curve.c_sigma = std::copysign(std::exp(fs2.intercept), ss.back());
        if (std::fabs(fw2.slope + r) > opt.tail.slope_tol)
            throw ProfileError("wrong-branch: tail slope does not match -r");
    }
    return curve;
}

ProfileCurve compute_profile(const Parameters& params, const ProfileOptions& opt) {
    const auto roots = shoot_speed_scan(params, opt.shoot);
    if (roots.empty())
        throw ProfileError("no-root-in-bracket: shooting scan found no speed");
    // The first-order passage is equally clean across the candidate band;
    // take the candidate closest to r_eye (largest r).
    return build_curve_at_speed(params, roots.back(), opt);
}

// ---------------------------------------------------------------------------
// Dense fields

namespace {

double smooth01(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace

DenseFields dense_profile_fields(const ProfileCurve& curve,
                                 const std::vector<double>& grid) {
    const Parameters& params = curve.params;
    const double r = curve.r;
    const double phi = 0.5 * std::sqrt(params.ell);
    const double expo = params.ell / 2.0;
    const double y2 = curve.crossing.y2;

    DenseFields df;
    df.Z = grid;
    const std::size_t n = grid.size();
    df.w.assign(n, 0.0);
    df.sigma.assign(n, 0.0);
    df.lam_w.assign(n, 0.0);
    df.lam_sigma.assign(n, 0.0);
    df.rho.assign(n, 0.0);
    df.u.assign(n, 0.0);
    df.Psi.assign(n, 0.0);

    const OriginSeries series = origin_series(params, r, 8);
    const ManifoldSeries ms = manifold_series(params, r, curve.crossing);
    const ArcParam ap = arc_parametrization(params, r, ms, curve.crossing, 0.06);

    // Region boundaries in y. The two-sided manifold series covers a band
    // around y2; the blend window smears the trajectory/series mismatch.
    const double y_blend_lo = y2 - 0.05, y_blend_hi = y2 - 0.02;
    const double y_arc_hi = std::min(y2 + kArcYSpan, ap.y.back() - 1e-9);
    const double Z0 = 1e-4;

    auto fill_node = [&](std::size_t i, double w, double s) {
        df.w[i] = w;
        df.sigma[i] = s;
        const Determinants det = determinants({w, s}, params, r);
        const double sc = 1.0 + w * w + s * s;
        if (std::fabs(det.delta) > 1e-12 * sc) {
            df.lam_w[i] = -det.delta1 / det.delta;
            df.lam_sigma[i] = -det.delta2 / det.delta;
        } else {
            df.lam_w[i] = curve.crossing.lam_limit[0];
            df.lam_sigma[i] = curve.crossing.lam_limit[1];
        }
        df.rho[i] = std::pow(phi * grid[i] * s, expo);
        df.u[i] = -0.5 * grid[i] * w;
    };

    auto series_phase = [&](double yq) {
        const double s = ap.s_of_y(yq);
        return ms.point_at(s);
    };

    // Collect trajectory-target nodes.
    std::vector<double> y_in_targets, y_out_targets;
    std::vector<std::size_t> idx_in, idx_out;
    for (std::size_t i = 0; i < n; ++i) {
        const double Z = grid[i];
        if (Z <= 1.25 * Z0) {
            if (Z == 0.0) {
                const double w_e = params.ell * (r - 1.0) / params.d;
                df.w[i] = w_e;
                df.sigma[i] = 0.0;  // sigma diverges at the origin
                df.rho[i] = 1.0;
                df.u[i] = 0.0;
                df.lam_w[i] = 0.0;
                df.lam_sigma[i] = 0.0;
            } else {
                const PhasePoint pt = series.phase_at(Z, params);
                fill_node(i, pt.w, pt.sigma);
                df.rho[i] = series.rho_at(Z);
                df.u[i] = series.dpsi_at(Z);
            }
            continue;
        }
        const double yq = std::log(Z);
        if (yq < y_blend_hi) {
            y_in_targets.push_back(yq);
            idx_in.push_back(i);
        } else if (yq <= y_arc_hi) {
            const PhasePoint pt = series_phase(yq);
            fill_node(i, pt.w, pt.sigma);
        } else {
            y_out_targets.push_back(yq);
            idx_out.push_back(i);
        }
    }

    // Incoming trajectory from the series launch.
    if (!idx_in.empty()) {
        const PhasePoint p0 = series.phase_at(Z0, params);
        std::size_t k = 0;
        integrate_with_stops(params, r, std::log(Z0), {p0.w, p0.sigma},
                             y_in_targets,
                             [&](double yq, const std::array<double, 2>& st) {
                                 const std::size_t i = idx_in[k++];
                                 double w = st[0], s = st[1];
                                 if (yq > y_blend_lo) {
                                     const double th = smooth01(
                                         (yq - y_blend_lo) / (y_blend_hi - y_blend_lo));
                                     const PhasePoint pm = series_phase(yq);
                                     w = (1.0 - th) * w + th * pm.w;
                                     s = (1.0 - th) * s + th * pm.sigma;
                                 }
                                 fill_node(i, w, s);
                             });
    }

    // Outgoing trajectory continues from the series state at y_arc_hi; a
    // transverse nudge ladder guards against the truncation residual peeling
    // into the sonic line.
    if (!idx_out.empty()) {
        const PhasePoint pa = series_phase(y_arc_hi);
        bool done = false;
        for (double nudge : {curve.crossing.tail_nudge, 0.0, -1e-9, -1e-8, -1e-7,
                             -1e-6, -1e-5, -1e-4, -1e-3, 1e-9, 1e-8, 1e-7, 1e-6,
                             1e-5, 1e-4, 1e-3}) {
            std::vector<std::size_t> idx = idx_out;
            std::size_t k = 0;
            try {
                integrate_with_stops(
                    params, r, y_arc_hi,
                    {pa.w + nudge * ms.n[0], pa.sigma + nudge * ms.n[1]},
                    y_out_targets,
                    [&](double, const std::array<double, 2>& st) {
                        fill_node(idx[k++], st[0], st[1]);
                    });
                done = true;
                break;
            } catch (const ProfileError&) {
                continue;
            }
        }
        if (!done) throw ProfileError("dense fields: outgoing leg stalled");
    }

    // Psi by cumulative Hermite on the target grid using u' = -(w + Lw)/2.
    const double psi0 = -1.0 / (r - 2.0);
    double acc = psi0;
    if (grid[0] > 0.0) acc = series.psi_at(std::min(grid[0], 10 * Z0));
    // For grids starting above the series radius, anchor by integrating the
    // series leg coarsely (grid[0] is expected at or near zero in practice).
    df.Psi[0] = (grid[0] <= 1.25 * Z0) ? (grid[0] == 0.0 ? psi0 : series.psi_at(grid[0]))
                                       : acc;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        const double fa = df.u[i], fb = df.u[i + 1];
        const double da = -0.5 * (df.w[i] + df.lam_w[i]);
        const double db = -0.5 * (df.w[i + 1] + df.lam_w[i + 1]);
        df.Psi[i + 1] = df.Psi[i] + h * (0.5 * (fa + fb) + h * (da - db) / 12.0);
    }
    return df;
}

// ---------------------------------------------------------------------------
// ManifoldArc

struct ManifoldArc::Impl {
    Parameters params;
    double r;
    ManifoldSeries ms;
    ArcParam ap;
    double y2;
    double y_lo, y_hi;
};

ManifoldArc::ManifoldArc(const ProfileCurve& curve) {
    auto impl = std::make_shared<Impl>();
    impl->params = curve.params;
    impl->r = curve.r;
    impl->ms = manifold_series(curve.params, curve.r, curve.crossing);
    impl->ap =
        arc_parametrization(curve.params, curve.r, impl->ms, curve.crossing, 0.06);
    impl->y2 = curve.crossing.y2;
    impl->y_lo = impl->ap.y.front() + 1e-12;
    impl->y_hi = impl->ap.y.back() - 1e-12;
    y2_ = impl->y2;
    impl_ = std::move(impl);
}

bool ManifoldArc::covers(double y) const {
    return y >= impl_->y_lo && y <= impl_->y_hi;
}

PhasePoint ManifoldArc::at_y(double y) const {
    return impl_->ms.point_at(impl_->ap.s_of_y(y));
}

// ---------------------------------------------------------------------------
// Interpolation

double interp4(const std::vector<double>& xs, const std::vector<double>& ys,
               double x) {
    const std::size_t n = xs.size();
    if (n < 4) {
        if (n == 0) return 0.0;
        if (n == 1) return ys[0];
        // linear fallback
        const double t = (x - xs[0]) / (xs.back() - xs[0]);
        return ys[0] + t * (ys.back() - ys[0]);
    }
    std::size_t lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (xs[mid] <= x)
            lo = mid;
        else
            hi = mid;
    }
    std::size_t start = (lo >= 1) ? lo - 1 : 0;
    if (start + 3 >= n) start = n - 4;
    double acc = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
        double term = ys[start + a];
        for (std::size_t b = 0; b < 4; ++b) {
            if (a == b) continue;
            term *= (x - xs[start + b]) / (xs[start + a] - xs[start + b]);
        }
        acc += term;
    }
    return acc;
}

namespace {

double curve_field_at(const ProfileCurve& c, double Z, double CurveSample::*field) {
    const double y = std::log(Z);
    const auto& s = c.samples;
    std::size_t lo = 0, hi = s.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (s[mid].y <= y)
            lo = mid;
        else
            hi = mid;
    }
    std::size_t start = (lo >= 1) ? lo - 1 : 0;
    if (start + 3 >= s.size()) start = s.size() - 4;
    double acc = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
        double term = s[start + a].*field;
        for (std::size_t b = 0; b < 4; ++b) {
            if (a == b) continue;
            term *= (y - s[start + b].y) / (s[start + a].y - s[start + b].y);
        }
        acc += term;
    }
    return acc;
}

}  // namespace

double ProfileCurve::w_at(double Z) const {
    return curve_field_at(*this, Z, &CurveSample::w);
}
double ProfileCurve::sigma_at(double Z) const {
    return curve_field_at(*this, Z, &CurveSample::sigma);
}
double ProfileCurve::lam_w_at(double Z) const {
    return curve_field_at(*this, Z, &CurveSample::lam_w);
}
double ProfileCurve::lam_sigma_at(double Z) const {
    return curve_field_at(*this, Z, &CurveSample::lam_sigma);
}
double ProfileCurve::lam2_w_at(double Z) const {
    return curve_field_at(*this, Z, &CurveSample::lam2_w);
}
double ProfileCurve::lam2_sigma_at(double Z) const {
    return curve_field_at(*this, Z, &CurveSample::lam2_sigma);
}

// ---------------------------------------------------------------------------
// Physical reconstruction

PhysicalProfile reconstruct_physical(const ProfileCurve& curve,
                                     const Parameters& params) {
    PhysicalProfile ph;
    ph.params = curve.params;
    ph.r = curve.r;
    ph.Z2 = curve.Z2;
    ph.curve = &curve;
    const double phi = 0.5 * std::sqrt(params.ell);
    const double expo = params.ell / 2.0;  // rho = (phi Z sigma)^{2/(p-1)}

    const std::size_t n = curve.samples.size();
    ph.Z.resize(n);
    ph.rho.resize(n);
    ph.dPsi.resize(n);
    ph.Psi.resize(n);
    ph.Q.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = curve.samples[i];
        if (s.sigma <= 0.0)
            throw ProfileError("reconstruction aborted: sigma <= 0 on the grid");
        ph.Z[i] = s.Z;
        const double m = phi * s.Z * s.sigma;
        ph.Q[i] = m * m;
        ph.rho[i] = std::pow(m, expo);
        ph.dPsi[i] = -0.5 * s.Z * s.w;
    }

    // Psi by exact integration of the cubic Hermite interpolant of
    // f(Z) = -Z w / 2, with f' = -(w + Lambda w)/2 available at the samples.
    const OriginSeries series = origin_series(params, curve.r, 8);
    const double Z0 = curve.samples.front().Z;
    double acc = series.psi_at(Z0);
    ph.Psi[0] = acc;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& a = curve.samples[i];
        const auto& b = curve.samples[i + 1];
        const double h = b.Z - a.Z;
        const double fa = -0.5 * a.Z * a.w, fb = -0.5 * b.Z * b.w;
        const double da = -0.5 * (a.w + a.lam_w), db = -0.5 * (b.w + b.lam_w);
        acc += h * (0.5 * (fa + fb) + h * (da - db) / 12.0);
        ph.Psi[i + 1] = acc;
    }

    // Tail exponent of Q ~ c Z^{-2(r-1)} over the last decade.
    {
        std::vector<double> Zs, Qs;
        const double Zt_hi = ph.Z.back() * 0.999, Zt_lo = Zt_hi / 10.0;
        for (int i = 0; i < 200; ++i) {
            const double Zq = Zt_lo * std::pow(Zt_hi / Zt_lo, i / 199.0);
            Zs.push_back(Zq);
            Qs.push_back(ph.Q_at(Zq));
        }
        const LinFit f = loglog_fit(Zs, Qs);
        ph.q_tail_slope = f.slope;
        ph.c_P_pm1 = std::exp(f.intercept);
    }
    return ph;
}

double PhysicalProfile::rho_at(double Zq) const {
    const double phi = 0.5 * std::sqrt(params.ell);
    return std::pow(phi * Zq * curve->sigma_at(Zq), params.ell / 2.0);
}
double PhysicalProfile::drho_at(double Zq) const {
    // Lambda rho / rho = (ell/2)(1 + Lambda sigma / sigma)
    const double s = curve->sigma_at(Zq);
    const double ls = curve->lam_sigma_at(Zq);
    return rho_at(Zq) * (params.ell / 2.0) * (1.0 + ls / s) / Zq;
}
double PhysicalProfile::dPsi_at(double Zq) const {
    return -0.5 * Zq * curve->w_at(Zq);
}
double PhysicalProfile::Psi_at(double Zq) const { return interp4(Z, Psi, Zq); }
double PhysicalProfile::Q_at(double Zq) const {
    const double phi = 0.5 * std::sqrt(params.ell);
    const double m = phi * Zq * curve->sigma_at(Zq);
    return m * m;
}

// ---------------------------------------------------------------------------
// Dampening

namespace {

// Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, zero first and second
// derivatives at both ends.
double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace

DampenedProfile dampen(const PhysicalProfile& physical, double n_P, double tau) {
    const Parameters& pr = physical.params;
    const double r = physical.r;
    const double slow = 2.0 * (r - 1.0) / (pr.p - 1.0);
    if (!(n_P > slow))
        throw ProfileError("non-integrable-energy: n_P must exceed 2(r-1)/(p-1)");

    DampenedProfile dp;
    dp.params = pr;
    dp.n_P = n_P;
    dp.tau = tau;
    dp.Zstar = std::exp(tau);
    dp.physical = &physical;
    dp.K_infty = n_P - slow;

    // Cumulative I(x) = int_5^x K(x')/x' dx' on [5, 10] by composite Simpson
    // on a fixed fine grid; beyond 10 the integrand is exactly K_infty / x.
    const int n_tab = 501;
    dp.zeta_table.assign(n_tab, 0.0);
    double acc = 0.0;
    auto Kof = [&](double x) { return dp.K_infty * smoothstep5((x - 5.0) / 5.0); };
    for (int i = 1; i < n_tab; ++i) {
        const double xa = 5.0 + 5.0 * (i - 1) / (n_tab - 1);
        const double xb = 5.0 + 5.0 * i / (n_tab - 1);
        const double xm = 0.5 * (xa + xb);
        acc += (xb - xa) / 6.0 * (Kof(xa) / xa + 4.0 * Kof(xm) / xm + Kof(xb) / xb);
        dp.zeta_table[i] = acc;
    }

    const std::size_t n = physical.Z.size();
    dp.x.resize(n);
    dp.rho_D.resize(n);
    dp.u_D.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = physical.Z[i] / dp.Zstar;
        dp.x[i] = x;
        dp.rho_D[i] = physical.rho[i] * dp.zeta(x);
        dp.u_D[i] = physical.dPsi[i] * dp.zeta_u(x);
    }
    return dp;
}

double DampenedProfile::zeta(double xq) const {
    if (xq <= 5.0) return 1.0;
    double I;
    if (xq >= 10.0) {
        I = zeta_table.back() + K_infty * std::log(xq / 10.0);
    } else {
        const double t = (xq - 5.0) / 5.0 * (zeta_table.size() - 1);
        const std::size_t i =
            std::min<std::size_t>((std::size_t)t, zeta_table.size() - 2);
        const double frac = t - i;
        I = zeta_table[i] * (1.0 - frac) + zeta_table[i + 1] * frac;
    }
    return std::exp(-I);
}

double DampenedProfile::zeta_u(double xq) const {
    return 1.0 - smoothstep5((xq - 5.0) / 5.0);
}

double DampenedProfile::rho_renorm(double Z) const {
    return zeta(Z / Zstar) * physical->rho_at(Z);
}

double DampenedProfile::u_renorm(double Z) const {
    return zeta_u(Z / Zstar) * physical->dPsi_at(Z);
}

}  // namespace implode
