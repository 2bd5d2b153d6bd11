#include "implode/repulsivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace implode {

namespace {

// Log-spaced evaluation grid over the curve domain with Z2 inserted exactly.
std::vector<double> eval_grid(const ProfileCurve& curve, int n_points) {
    std::vector<double> Z(n_points);
    const double z_lo = curve.Z_min();
    const double z_hi = curve.Z_max() * 0.999;
    for (int i = 0; i < n_points; ++i)
        Z[i] = z_lo * std::pow(z_hi / z_lo, double(i) / (n_points - 1));
    Z.push_back(curve.Z2);
    std::sort(Z.begin(), Z.end());
    return Z;
}

}  // namespace

LambdaFields lambda_fields(const ProfileCurve& curve, int n_points) {
    LambdaFields lf;
    lf.Z = eval_grid(curve, n_points);
    const std::size_t n = lf.Z.size();
    lf.lam_w.resize(n);
    lf.lam_sigma.resize(n);
    lf.F.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double Z = lf.Z[i];
        double lw, ls;
        if (Z == curve.Z2) {
            lw = curve.crossing.lam_limit[0];
            ls = curve.crossing.lam_limit[1];
        } else {
            lw = curve.lam_w_at(Z);
            ls = curve.lam_sigma_at(Z);
        }
        lf.lam_w[i] = lw;
        lf.lam_sigma[i] = ls;
        lf.F[i] = curve.sigma_at(Z) + ls;
    }
    return lf;
}

RepulsivityReport margins(const ProfileCurve& curve, const Parameters& params,
                          int n_points) {
    const LambdaFields lf = lambda_fields(curve, n_points);

    RepulsivityReport rep;
    rep.Z2 = curve.Z2;
    rep.Z_max = lf.Z.back();
    rep.ns_regime = (params.d == 3) && (params.ell > std::sqrt(3.0));

    const double inf = std::numeric_limits<double>::infinity();
    rep.inside_q1 = rep.inside_q2 = rep.outside_q1 = rep.outside_qout =
        Margin{inf, 0.0, false};
    auto update = [](Margin& m, double v, double Z) {
        if (v < m.value) {
            m.value = v;
            m.location = Z;
        }
    };
    for (std::size_t i = 0; i < lf.Z.size(); ++i) {
        const double Z = lf.Z[i];
        const double w = (Z == curve.Z2) ? curve.crossing.w2 : curve.w_at(Z);
        const double s = (Z == curve.Z2) ? curve.crossing.sigma2 : curve.sigma_at(Z);
        const double lw = lf.lam_w[i];
        const double F = lf.F[i];
        const double base = 1.0 - w - lw;
        const double q1 = base * base - F * F;
        const double q2 = base - (1.0 - w) * F / s;
        if (Z <= curve.Z2) {
            update(rep.inside_q1, q1, Z);
            update(rep.inside_q2, q2, Z);
        }
        if (Z >= curve.Z2) {
            update(rep.outside_q1, q1, Z);
            update(rep.outside_qout, base, Z);
        }
    }
    // Local refinement of each attained minimum (ternary search on the
    // smooth interpolants), so the reported values are insensitive to the
    // evaluation-grid resolution.
    auto q_eval = [&](double Z, int which) {
        const bool at2 = std::fabs(Z - curve.Z2) < 1e-14 * curve.Z2;
        const double w = at2 ? curve.crossing.w2 : curve.w_at(Z);
        const double s = at2 ? curve.crossing.sigma2 : curve.sigma_at(Z);
        const double lw = at2 ? curve.crossing.lam_limit[0] : curve.lam_w_at(Z);
        const double ls = at2 ? curve.crossing.lam_limit[1] : curve.lam_sigma_at(Z);
        const double F = s + ls;
        const double base = 1.0 - w - lw;
        if (which == 0) return base * base - F * F;
        if (which == 1) return base - (1.0 - w) * F / s;
        return base;
    };
    auto refine = [&](Margin& m, int which, double lo_bound, double hi_bound) {
        double span = 0.01 * (1.0 + m.location);
        double lo = std::max(lo_bound, m.location - span);
        double hi = std::min(hi_bound, m.location + span);
        for (int it = 0; it < 80 && hi - lo > 1e-11 * (1.0 + m.location); ++it) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            if (q_eval(m1, which) < q_eval(m2, which))
                hi = m2;
            else
                lo = m1;
        }
        const double Zm = 0.5 * (lo + hi);
        const double v = q_eval(Zm, which);
        if (v < m.value) {
            m.value = v;
            m.location = Zm;
        }
    };
    const double Z_lo = curve.Z_min(), Z_hi = lf.Z.back();
    refine(rep.inside_q1, 0, Z_lo, curve.Z2);
    refine(rep.inside_q2, 1, Z_lo, curve.Z2);
    refine(rep.outside_q1, 0, curve.Z2, Z_hi);
    refine(rep.outside_qout, 2, curve.Z2, Z_hi);

    rep.inside_q1.positive = rep.inside_q1.value > 0.0;
    rep.inside_q2.positive = rep.inside_q2.value > 0.0;
    rep.outside_q1.positive = rep.outside_q1.value > 0.0;
    rep.outside_qout.positive = rep.outside_qout.value > 0.0;

    // Surface gravity: two evaluations at P2.
    const double lw2 = curve.crossing.lam_limit[0];
    const double ls2 = curve.crossing.lam_limit[1];
    rep.kappa = -(lw2 + ls2);
    const double w2 = curve.crossing.w2, s2 = curve.crossing.sigma2;
    const double F2 = s2 + ls2;
    rep.kappa_alt = 1.0 - w2 - lw2 - (1.0 - w2) * F2 / s2;

    // Analytic tail floor: beyond Z_max, w, Lambda w decay like Z^-r so
    // 1 - w - Lw >= 1 - |c_w| (1 + r) Z^-r with a safety factor of 2.
    const double r = curve.r;
    rep.tail_floor =
        1.0 - 2.0 * std::fabs(curve.c_w) * (1.0 + r) * std::pow(rep.Z_max, -r);

    rep.inside_ok = rep.inside_q1.positive && rep.inside_q2.positive;
    rep.outside_ok = rep.outside_q1.positive && rep.outside_qout.positive &&
                     rep.tail_floor > 0.0;
    return rep;
}

double surface_gravity(const ProfileCurve& curve) {
    return -(curve.crossing.lam_limit[0] + curve.crossing.lam_limit[1]);
}

CharacteristicSpeeds characteristic_speeds(const ProfileCurve& curve,
                                           int n_points) {
    CharacteristicSpeeds cs;
    cs.Z = eval_grid(curve, n_points);
    cs.L.resize(cs.Z.size());
    cs.Lbar.resize(cs.Z.size());
    for (std::size_t i = 0; i < cs.Z.size(); ++i) {
        const double w = curve.w_at(cs.Z[i]);
        const double s = curve.sigma_at(cs.Z[i]);
        cs.L[i] = (1.0 - w) - s;
        cs.Lbar[i] = (1.0 - w) + s;
    }
    for (std::size_t i = 0; i + 1 < cs.Z.size(); ++i) {
        if ((cs.L[i] < 0.0) != (cs.L[i + 1] < 0.0)) {
            const double t = cs.L[i] / (cs.L[i] - cs.L[i + 1]);
            cs.zero_crossings.push_back(cs.Z[i] + t * (cs.Z[i + 1] - cs.Z[i]));
        }
    }
    cs.multi_sonic = cs.zero_crossings.size() > 1;
    return cs;
}

}  // namespace implode
