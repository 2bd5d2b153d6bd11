#include "implode/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "implode/fit.hpp"

namespace implode {

double SimState::b() const {
    return viscous ? std::exp(-e_exponent * tau) : 0.0;
}

namespace {

double bump(double Z, double center, double width) {
    const double t = (Z - center) / width;
    if (std::fabs(t) >= 1.0) return 0.0;
    // C-infinity compactly supported bump.
    return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

}  // namespace

SimState init(const PhysicalProfile& physical, const DampenedProfile* dampened,
              const Perturbation& pert, const SimOptions& opt) {
    SimState st;
    st.params = physical.params;
    st.r = physical.r;
    st.tau = opt.tau0;
    st.viscous = opt.viscous;
    st.e_exponent = compat_exponent(physical.params, physical.r);

    const double Z_out = (opt.Z_out > 0.0) ? opt.Z_out : 8.0 * physical.Z2;
    const int n = opt.n_nodes;
    st.h = Z_out / (n - 1);
    st.Z.resize(n);
    for (int i = 0; i < n; ++i) st.Z[i] = i * st.h;

    // Re-integrated fields at the grid nodes; interpolated data would leave
    // sample-joint kinks that the finite differences amplify.
    const DenseFields df = dense_profile_fields(*physical.curve, st.Z);
    st.rho = df.rho;
    st.Psi = df.Psi;
    if (dampened) {
        // Tail-change factors in the original variable x = Z / Zstar, and
        // Psi_D rebuilt from the cut-off velocity.
        std::vector<double> u(n);
        for (int i = 0; i < n; ++i) {
            const double x = st.Z[i] / dampened->Zstar;
            st.rho[i] = df.rho[i] * dampened->zeta(x);
            u[i] = df.u[i] * dampened->zeta_u(x);
        }
        double acc = -1.0 / (st.r - 2.0);
        st.Psi[0] = acc;
        for (int i = 1; i < n; ++i) {
            acc += 0.5 * (u[i - 1] + u[i]) * st.h;
            st.Psi[i] = acc;
        }
    }

    if (pert.amplitude != 0.0) {
        for (int i = 0; i < n; ++i) {
            const double s = bump(st.Z[i], pert.center, pert.width);
            st.rho[i] *= 1.0 + pert.amplitude * s;
        }
        for (double v : st.rho)
            if (v <= 0.0)
                throw SimError("perturbation rejected: rho_T <= 0");
    }
    return st;
}

namespace {

// Radial derivative helpers on a uniform node grid including Z = 0.
// rho and Psi are even; their first derivatives vanish at the origin. First
// derivatives use 4th-order centered stencils (with parity mirrors at the
// origin), which keeps the advection terms from dominating the truncation
// error; the Laplacian stays 2nd order and sets the scheme order.
struct Deriv {
    const std::vector<double>& f;
    double h;
    int n;
    bool odd_extension;  // true when f(-Z) = -f(Z) (velocity-type fields)

    double at(int i) const {
        // even/odd mirror for i < 0
        if (i >= 0) return f[i];
        return odd_extension ? -f[-i] : f[-i];
    }
    double d1(int i) const {
        if (i == 0) return odd_extension ? (f[1] - at(-1)) / (2 * h) : 0.0;
        if (i >= n - 2) {
            if (i == n - 1)
                return (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
            return (f[i + 1] - f[i - 1]) / (2 * h);
        }
        return (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) /
               (12.0 * h);
    }
    double d2(int i) const {
        if (i == 0)
            return odd_extension ? 0.0 : 2.0 * (f[1] - f[0]) / (h * h);
        if (i == n - 1)
            return (2 * f[n - 1] - 5 * f[n - 2] + 4 * f[n - 3] - f[n - 4]) /
                   (h * h);
        return (f[i + 1] - 2 * f[i] + f[i - 1]) / (h * h);
    }
};

}  // namespace

RhsFields rhs(const SimState& st) {
    const int n = (int)st.Z.size();
    const double h = st.h;
    const double d = st.params.d, ell = st.params.ell, p = st.params.p;
    const double r = st.r;

    const Deriv Drho{st.rho, h, n, false};
    const Deriv DPsi{st.Psi, h, n, false};

    RhsFields out;
    out.drho.resize(n);
    out.dPsi.resize(n);

    // Viscous quadrature F(u, rho) when enabled: cumulative trapezoid of
    // alpha (mu + mu') (Lap U - 2 U / Z^2) / rho^2 from the origin, with
    // U = Psi' odd so the integrand vanishes at Z = 0.
    std::vector<double> visc(n, 0.0);
    const double b = st.b();
    if (st.viscous && b > 0.0 && (st.params.mu + st.params.mu_prime) > 0.0) {
        const double alpha = std::pow(2.0, st.params.gamma / (st.params.gamma - 1.0));
        std::vector<double> U(n);
        for (int i = 0; i < n; ++i) U[i] = DPsi.d1(i);
        const Deriv DU{U, h, n, true};
        std::vector<double> integrand(n, 0.0);
        for (int i = 1; i < n; ++i) {
            const double Z = st.Z[i];
            const double lapU = DU.d2(i) + (d - 1.0) / Z * DU.d1(i);
            integrand[i] = (lapU - 2.0 * U[i] / (Z * Z)) / (st.rho[i] * st.rho[i]);
        }
        double acc = 0.0;
        for (int i = 1; i < n; ++i) {
            acc += 0.5 * (integrand[i - 1] + integrand[i]) * h;
            visc[i] = alpha * (st.params.mu + st.params.mu_prime) * acc;
        }
        visc[0] = 0.0;
    }

    for (int i = 0; i < n; ++i) {
        const double Z = st.Z[i];
        const double dpsi = DPsi.d1(i);
        const double drho = Drho.d1(i);
        const double lap_psi = (i == 0) ? d * DPsi.d2(0)
                                        : DPsi.d2(i) + (d - 1.0) / Z * dpsi;
        out.drho[i] = -st.rho[i] * lap_psi - 0.5 * ell * (r - 1.0) * st.rho[i] -
                      (2.0 * dpsi + Z) * drho;
        out.dPsi[i] = b * b * visc[i] -
                      (dpsi * dpsi + (r - 2.0) * st.Psi[i] + Z * dpsi +
                       std::pow(st.rho[i], p - 1.0));
    }
    return out;
}

namespace {

double max_speed(const SimState& st) {
    const int n = (int)st.Z.size();
    const Deriv DPsi{st.Psi, st.h, n, false};
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double adv = std::fabs(2.0 * DPsi.d1(i) + st.Z[i]);
        const double sound =
            std::sqrt((st.params.p - 1.0) * std::pow(st.rho[i], st.params.p - 1.0));
        s = std::max(s, adv + sound);
    }
    return s;
}

}  // namespace

Diagnostics run(SimState& st, double tau_end, const SimOptions& opt,
                const PhysicalProfile& reference) {
    Diagnostics diag;
    const int n = (int)st.Z.size();
    const double hat_Z = (opt.hat_Z > 0.0) ? opt.hat_Z : reference.Z2;

    // Reference fields re-integrated on the grid (same construction as the
    // initial data, so the initial deviation is zero to solver tolerance).
    const DenseFields ref = dense_profile_fields(*reference.curve, st.Z);
    const std::vector<double>& rho_ref = ref.rho;
    const std::vector<double>& u_ref = ref.u;

    // Generator of the blow-up-time translation: the renormalized flow has
    // the exact eigenvalue lambda = r along this family, so "deviation from
    // the profile" is measured orbitally, modulo this one-parameter family.
    std::vector<double> mode_rho(n), mode_u(n);
    if (opt.orbital_deviation) {
        const double ell = st.params.ell, r = st.r;
        for (int i = 0; i < n; ++i) {
            const double Z = st.Z[i];
            const double drho_ref =
                (Z > 0.0 && ref.sigma[i] > 0.0)
                    ? ref.rho[i] * (ell / 2.0) *
                          (1.0 + ref.lam_sigma[i] / ref.sigma[i]) / Z
                    : 0.0;
            const double du_ref = -0.5 * (ref.w[i] + ref.lam_w[i]);
            mode_rho[i] = -0.5 * ell * (r - 1.0) * ref.rho[i] - Z * drho_ref;
            mode_u[i] = -(r - 1.0) * ref.u[i] - Z * du_ref;
        }
    }

    const double slow = 2.0 * (st.r - 1.0) / (st.params.p - 1.0);
    auto weighted_norms = [&](DiagnosticsSample& smp) {
        // chi_k at sigma = 0 with the n_P-dominated outer factor dropped on
        // the truncated domain (Z < Z^*): chi_k ~ <Z>^{2k - d + 2(r-1)(p+1)/(p-1)}.
        const double p = st.params.p;
        const double base_pow =
            -st.params.d + 2.0 * (st.r - 1.0) * (p + 1.0) / (p - 1.0);
        const Deriv DPsi{st.Psi, st.h, n, false};
        double m[3] = {0.0, 0.0, 0.0};
        std::vector<double> rho_t(n), psi_t(n);
        for (int i = 0; i < n; ++i) {
            rho_t[i] = st.rho[i] - rho_ref[i];
            psi_t[i] = st.Psi[i] - ref.Psi[i];
        }
        const Deriv Drt{rho_t, st.h, n, false};
        const Deriv Dpt{psi_t, st.h, n, false};
        for (int i = 1; i < n; ++i) {
            const double Z = st.Z[i];
            const double zb = std::sqrt(1.0 + Z * Z);
            const double meas = std::pow(Z, st.params.d - 1.0) * st.h;
            const double rho_d = rho_ref[i];  // dampened/base density weight
            for (int k = 0; k < 3; ++k) {
                const double chi = std::pow(zb, 2.0 * k + base_pow);
                double dr_k, du_k;
                if (k == 0) {
                    dr_k = rho_t[i];
                    du_k = Dpt.d1(i);
                } else if (k == 1) {
                    dr_k = Drt.d1(i);
                    du_k = Dpt.d2(i);
                } else {
                    dr_k = Drt.d2(i);
                    du_k = 0.0;  // third derivative omitted in the diagnostic
                }
                m[k] += chi * meas *
                        ((p - 1.0) * std::pow(rho_d, p - 2.0) * st.rho[i] * dr_k * dr_k +
                         st.rho[i] * st.rho[i] * du_k * du_k);
            }
        }
        smp.norm_m0 = std::sqrt(m[0]);
        smp.norm_m1 = std::sqrt(m[0] + m[1]);
        smp.norm_m2 = std::sqrt(m[0] + m[1] + m[2]);
        (void)DPsi;
        (void)slow;
    };

    auto sample = [&](double tau) {
        DiagnosticsSample smp{};
        smp.tau = tau;
        const RhsFields f = rhs(st);
        double res_r = 0.0, res_p = 0.0, dev_r = 0.0, dev_u = 0.0;
        const Deriv DPsi{st.Psi, st.h, n, false};
        // Orbital projection coefficient over the compact window.
        double c_mode = 0.0;
        if (opt.orbital_deviation) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n && st.Z[i] <= hat_Z; ++i) {
                const double dr = st.rho[i] - rho_ref[i];
                const double du = DPsi.d1(i) - u_ref[i];
                num += dr * mode_rho[i] + du * mode_u[i];
                den += mode_rho[i] * mode_rho[i] + mode_u[i] * mode_u[i];
            }
            if (den > 0.0) c_mode = num / den;
        }
        for (int i = 0; i < n; ++i) {
            if (st.Z[i] > hat_Z) break;
            res_r = std::max(res_r, std::fabs(f.drho[i]));
            res_p = std::max(res_p, std::fabs(f.dPsi[i]));
            const double dr = st.rho[i] - rho_ref[i] - c_mode * mode_rho[i];
            const double du = DPsi.d1(i) - u_ref[i] - c_mode * mode_u[i];
            dev_r = std::max(dev_r, std::fabs(dr));
            dev_u = std::max(dev_u, std::fabs(du));
        }
        smp.residual_rho = res_r;
        smp.residual_psi = res_p;
        smp.dev_rho = dev_r;
        smp.dev_u = dev_u;
        weighted_norms(smp);
        diag.samples.push_back(smp);
    };

    sample(st.tau);
    double next_diag = st.tau + opt.diag_interval;

    std::vector<double> rho1(n), psi1(n), rho2(n), psi2(n);
    while (st.tau < tau_end) {
        const double dt =
            std::min(opt.cfl * st.h / max_speed(st), tau_end - st.tau);
        if (dt < 1e-12) {
            diag.blowup = true;
            break;
        }
        // SSP-RK3
        const RhsFields k1 = rhs(st);
        SimState s1 = st;
        for (int i = 0; i < n; ++i) {
            s1.rho[i] = st.rho[i] + dt * k1.drho[i];
            s1.Psi[i] = st.Psi[i] + dt * k1.dPsi[i];
        }
        s1.tau = st.tau + dt;
        const RhsFields k2 = rhs(s1);
        SimState s2 = st;
        for (int i = 0; i < n; ++i) {
            s2.rho[i] = 0.75 * st.rho[i] + 0.25 * (s1.rho[i] + dt * k2.drho[i]);
            s2.Psi[i] = 0.75 * st.Psi[i] + 0.25 * (s1.Psi[i] + dt * k2.dPsi[i]);
        }
        s2.tau = st.tau + 0.5 * dt;
        const RhsFields k3 = rhs(s2);
        bool bad = false;
        for (int i = 0; i < n; ++i) {
            st.rho[i] = st.rho[i] / 3.0 + 2.0 / 3.0 * (s2.rho[i] + dt * k3.drho[i]);
            st.Psi[i] = st.Psi[i] / 3.0 + 2.0 / 3.0 * (s2.Psi[i] + dt * k3.dPsi[i]);
            if (!std::isfinite(st.rho[i]) || !std::isfinite(st.Psi[i])) bad = true;
            if (st.rho[i] <= 0.0) diag.vacuum = true;
        }
        st.tau += dt;
        if (bad) {
            diag.blowup = true;
            break;
        }
        if (diag.vacuum) break;
        if (st.tau >= next_diag - 1e-12) {
            sample(st.tau);
            next_diag += opt.diag_interval;
        }
    }
    sample(st.tau);
    diag.tau_end = st.tau;
    return diag;
}

// ---------------------------------------------------------------------------
// Physical-variable checks

namespace {

struct HatFields {
    double rho;  // physical density
    double u;    // physical velocity
};

// Exact self-similar solution in physical variables. The hat system runs at
// half speed (rho(t,x) = 2^{-1/(gamma-1)} rho_hat^2(t/2, x)), so the physical
// time t maps to the hat time s = t/2 and blow-up sits at t = 2 T_hat.
// Consistency of d tau/ds = 1/nu with nu = e^{-r tau} forces nu = r (T - s),
// i.e. tau = -log(r (T - s))/r; the log r shift matters for exactness.
double tau_of_hat_time(double r, double T_hat, double s) {
    return -std::log(r * (T_hat - s)) / r;
}

HatFields exact_fields(const PhysicalProfile& ph, double T_hat, double t,
                       double x) {
    const double r = ph.r;
    const double ell = ph.params.ell;
    const double s = 0.5 * t;
    const double tau = tau_of_hat_time(r, T_hat, s);
    const double Z = x * std::exp(tau);
    const double Zq = std::min(std::max(Z, ph.Z.front()), ph.Z.back() * 0.999);
    const double rho_hat = std::exp(0.5 * ell * (r - 1.0) * tau) * ph.rho_at(Zq);
    const double U = std::exp((r - 1.0) * tau) * ph.dPsi_at(Zq);
    HatFields f;
    f.rho = std::pow(2.0, -0.5 * ell) * rho_hat * rho_hat;
    f.u = U;
    return f;
}

}  // namespace

RateCurves physical_rates(const PhysicalProfile& ph, double T_hat, int n_samples) {
    RateCurves rc;
    const double r = ph.r;
    const double ell = ph.params.ell;

    // sup_Z of the profile shapes (time-independent by self-similarity).
    double sup_rho_p2 = 0.0, sup_u_p = 0.0;
    for (std::size_t i = 0; i < ph.Z.size(); ++i) {
        sup_rho_p2 = std::max(sup_rho_p2, ph.rho[i] * ph.rho[i]);
        sup_u_p = std::max(sup_u_p, std::fabs(ph.dPsi[i]));
    }

    // Geometric approach to blow-up, capped so the fixed-x samples stay on
    // the computed profile domain Z = x0 e^tau <= 0.9 Z_max.
    const double tau_cap = std::log(0.9 * ph.Z.back() / rc.x0);
    const double gap_min = std::max(1e-5 * T_hat, std::exp(-r * tau_cap) / r);
    const double gap_max = 0.1 * T_hat;
    for (int i = 0; i < n_samples; ++i) {
        const double gap =
            gap_max * std::pow(gap_min / gap_max, double(i) / (n_samples - 1));
        const double s = T_hat - gap;  // hat time; physical t = 2 s
        const double tau = tau_of_hat_time(r, T_hat, s);
        rc.t.push_back(2.0 * s);
        rc.sup_rho.push_back(std::pow(2.0, -0.5 * ell) *
                             std::exp(ell * (r - 1.0) * tau) * sup_rho_p2);
        rc.sup_u.push_back(std::exp((r - 1.0) * tau) * sup_u_p);
        rc.fixed_x_rho.push_back(exact_fields(ph, T_hat, 2.0 * s, rc.x0).rho *
                                 std::pow(rc.x0, ell * (r - 1.0)));
    }

    std::vector<double> gap(n_samples), lr(n_samples), lu(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        gap[i] = 2.0 * T_hat - rc.t[i];
        lr[i] = rc.sup_rho[i];
        lu[i] = rc.sup_u[i];
    }
    rc.fitted_exp_rho = loglog_fit(gap, lr).slope;
    rc.fitted_exp_u = loglog_fit(gap, lu).slope;
    return rc;
}

PhysicalCheck physical_check(const PhysicalProfile& ph, double T_hat, double t0,
                             double t1, int n_cells, double x_lo, double x_hi) {
    if (!(t1 > t0) || !(t1 < 2.0 * T_hat))
        throw SimError("physical_check requires t0 < t1 < 2 T_hat");
    const double gamma = ph.params.gamma;
    const int d = ph.params.d;

    const double hx = (x_hi - x_lo) / n_cells;
    auto face = [&](int i) { return x_lo + i * hx; };
    auto center = [&](int i) { return x_lo + (i + 0.5) * hx; };
    auto area = [&](double x) { return std::pow(x, d - 1); };
    auto volume = [&](int i) {
        return (std::pow(face(i + 1), d) - std::pow(face(i), d)) / d;
    };

    // State: density and momentum per cell.
    std::vector<double> rho(n_cells), mom(n_cells);
    for (int i = 0; i < n_cells; ++i) {
        const HatFields f = exact_fields(ph, T_hat, t0, center(i));
        rho[i] = f.rho;
        mom[i] = f.rho * f.u;
    }

    auto pressure = [&](double rho_v) {
        return (gamma - 1.0) / gamma * std::pow(rho_v, gamma);
    };
    auto sound = [&](double rho_v) {
        return std::sqrt((gamma - 1.0) * std::pow(rho_v, gamma - 1.0));
    };

    double mass0 = 0.0;
    for (int i = 0; i < n_cells; ++i) mass0 += rho[i] * volume(i);
    double flux_acc = 0.0;

    double t = t0;
    while (t < t1 - 1e-15) {
        // CFL bound from |u| + c over cells.
        double smax = 1e-12;
        for (int i = 0; i < n_cells; ++i)
            smax = std::max(smax, std::fabs(mom[i] / rho[i]) + sound(rho[i]));
        const double dt = std::min(0.4 * hx / smax, t1 - t);

        // Rusanov fluxes on faces 0..n_cells with exact-solution ghosts.
        std::vector<double> Frho(n_cells + 1), Fmom(n_cells + 1);
        for (int f = 0; f <= n_cells; ++f) {
            double rl, ul, rr, ur;
            if (f == 0) {
                const HatFields g = exact_fields(ph, T_hat, t, center(0) - hx);
                rl = g.rho;
                ul = g.u;
            } else {
                rl = rho[f - 1];
                ul = mom[f - 1] / rho[f - 1];
            }
            if (f == n_cells) {
                const HatFields g =
                    exact_fields(ph, T_hat, t, center(n_cells - 1) + hx);
                rr = g.rho;
                ur = g.u;
            } else {
                rr = rho[f];
                ur = mom[f] / rho[f];
            }
            const double sl = std::fabs(ul) + sound(rl);
            const double sr = std::fabs(ur) + sound(rr);
            const double sm = std::max(sl, sr);
            const double Fl_r = rl * ul, Fr_r = rr * ur;
            const double Fl_m = rl * ul * ul + pressure(rl);
            const double Fr_m = rr * ur * ur + pressure(rr);
            Frho[f] = 0.5 * (Fl_r + Fr_r) - 0.5 * sm * (rr - rl);
            Fmom[f] = 0.5 * (Fl_m + Fr_m) - 0.5 * sm * (rr * ur - rl * ul);
        }

        flux_acc += dt * (area(face(0)) * Frho[0] - area(face(n_cells)) * Frho[n_cells]);

        for (int i = 0; i < n_cells; ++i) {
            const double V = volume(i);
            const double Al = area(face(i)), Ar = area(face(i + 1));
            const double src = (d - 1) * pressure(rho[i]) / center(i);
            rho[i] -= dt / V * (Ar * Frho[i + 1] - Al * Frho[i]);
            mom[i] -= dt / V * (Ar * Fmom[i + 1] - Al * Fmom[i]);
            mom[i] += dt * src;
            if (!(rho[i] > 0.0) || !std::isfinite(rho[i]))
                throw SimError("physical_check: scheme failure (vacuum/NaN)");
        }
        t += dt;
    }

    PhysicalCheck chk;
    chk.n_cells = n_cells;
    double mass1 = 0.0;
    for (int i = 0; i < n_cells; ++i) mass1 += rho[i] * volume(i);
    chk.mass_error = std::fabs(mass1 - mass0 - flux_acc) /
                     std::max(1e-300, std::fabs(flux_acc));

    for (int i = 0; i < n_cells; ++i) {
        const HatFields g = exact_fields(ph, T_hat, t1, center(i));
        const double er = std::fabs(rho[i] - g.rho);
        const double eu = std::fabs(mom[i] / rho[i] - g.u);
        chk.linf_rho = std::max(chk.linf_rho, er);
        chk.linf_u = std::max(chk.linf_u, eu);
        chk.l1_rho += er * volume(i);
        chk.l1_u += eu * volume(i);
    }
    return chk;
}

}  // namespace implode
