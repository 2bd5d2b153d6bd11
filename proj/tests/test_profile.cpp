#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "implode/fit.hpp"
#include "implode/ode.hpp"
#include "implode/profile.hpp"

using namespace implode;
using implode::testing::curve32;
using implode::testing::params32;
using implode::testing::physical32;

TEST_CASE("origin series boundary data and leading balances") {
    const Parameters& pr = params32();
    const double r = 1.3;
    const OriginSeries s = origin_series(pr, r, 8);

    CHECK(s.psi[0] == doctest::Approx(-1.0 / (r - 2.0)).epsilon(1e-14));
    CHECK(s.rho_at(0.0) == doctest::Approx(1.0).epsilon(1e-15));

    // w(Z -> 0) = w_e = ell (r-1)/d.
    const double w_e = pr.ell * (r - 1.0) / pr.d;
    const PhasePoint p1 = s.phase_at(1e-6, pr);
    CHECK(p1.w == doctest::Approx(w_e).epsilon(1e-8));

    // sigma * Z -> 2/sqrt(ell).
    CHECK(p1.sigma * 1e-6 == doctest::Approx(2.0 / std::sqrt(pr.ell)).epsilon(1e-8));

    // Cross-check against a short integration launched from Z = 1e-6.
    IntegrateOptions integ;
    integ.Z0 = 1e-6;
    integ.record = true;
    SonicRun run = integrate_to_sonic(pr, r, integ);
    bool checked = false;
    for (const auto& smp : run.samples) {
        if (smp.Z > 1e-4) {
            const PhasePoint ps = s.phase_at(smp.Z, pr);
            CHECK(smp.w == doctest::Approx(ps.w).epsilon(1e-6));
            checked = true;
            break;
        }
    }
    CHECK(checked);
}

TEST_CASE("origin series residual shrinks at the truncation order") {
    const Parameters& pr = params32();
    const OriginSeries s = origin_series(pr, 1.3, 6);
    const double r1 = s.residual(2e-2, pr);
    const double r2 = s.residual(1e-2, pr);
    const double slope = std::log2(r1 / r2);
    CHECK(slope > 5.0);
    CHECK(slope < 8.5);
}

TEST_CASE("origin series gauge singularity at r = 2") {
    CHECK_THROWS_WITH_AS(origin_series(params32(), 2.0 + 1e-9, 6),
                         doctest::Contains("gauge-singularity"), ProfileError);
    CHECK_THROWS_AS(origin_series(params32(), 1.3, 2), ProfileError);
}

TEST_CASE("integration residual along the trajectory") {
    const Parameters& pr = params32();
    IntegrateOptions integ;
    integ.record = true;
    SonicRun run = integrate_to_sonic(pr, 1.3, integ);
    REQUIRE(run.samples.size() > 100);
    int n_checked = 0;
    for (std::size_t i = 10; i < run.samples.size(); i += 17) {
        const auto& s = run.samples[i];
        const Coefficients c = coefficients({s.w, s.sigma}, pr, 1.3);
        const double res1 = c.a1 * s.lam_w + c.b1 * s.lam_sigma + c.d1;
        const double res2 = c.a2 * s.lam_w + c.b2 * s.lam_sigma + c.d2;
        const double sc = 1.0 + std::fabs(c.d1) + std::fabs(c.d2);
        CHECK(std::fabs(res1) < 1e-8 * sc);
        CHECK(std::fabs(res2) < 1e-8 * sc);
        ++n_checked;
    }
    CHECK(n_checked > 5);
}

TEST_CASE("generic sonic approach squeezes |Delta| into the funnel") {
    const Parameters& pr = params32();
    IntegrateOptions integ;
    integ.record = true;
    SonicRun run = integrate_to_sonic(pr, 1.28, integ);
    const auto& last = run.samples.back();
    const Determinants det_last = determinants({last.w, last.sigma}, pr, 1.28);
    CHECK(std::fabs(det_last.delta) < 1e-6);
    // Equivalent statement of the derivative blow-up of the Z-form field:
    // |dw/dZ| = |Delta1/(Z Delta)| exceeds 1e6 once |Delta| collapses while
    // the trajectory still moves (lam_w away from zero upstream).
    CHECK(run.met_sonic);
}

TEST_CASE("shooting scan finds a root with classification flip") {
    const Parameters& pr = params32();
    ShootOptions opt;
    opt.scan_points = 48;
    const auto roots = shoot_speed_scan(pr, opt);
    REQUIRE_FALSE(roots.empty());
    const ShootResult& root = roots.back();
    CHECK(root.r > 1.0);
    CHECK(root.r < pr.r_star);
    CHECK(std::fabs(root.miss) < 1e-6);
    IntegrateOptions integ;
    integ.record = false;
    const SonicRun lo = integrate_to_sonic(pr, root.bracket_lo, integ);
    const SonicRun hi = integrate_to_sonic(pr, root.bracket_hi, integ);
    CHECK(lo.approach[root.root_index].outcome !=
          hi.approach[root.root_index].outcome);
}

TEST_CASE("no-root bracket raises") {
    const Parameters& pr = params32();
    CHECK_THROWS_WITH_AS(shoot_speed(pr, 1.02, 1.05, {}),
                         doctest::Contains("no-root-in-bracket"), ProfileError);
}

TEST_CASE("completed curve: crossing regularity") {
    const ProfileCurve& c = curve32();

    CHECK(c.crossing.sigma2 == doctest::Approx(1.0 - c.crossing.w2).epsilon(1e-10));
    CHECK(c.sigma_at(c.Z2) == doctest::Approx(1.0 - c.w_at(c.Z2)).epsilon(1e-8));

    for (double dz = -0.01; dz <= 0.01; dz += 0.00125) {
        const double lw = c.lam_w_at(c.Z2 + dz);
        CHECK(std::fabs(lw / c.Z2) < 10.0);
        CHECK(std::fabs(lw - c.crossing.lam_limit[0]) < 5e-3);
    }

    const Parameters& pr = params32();
    const Determinants din =
        determinants({c.w_at(c.Z2 - 1e-3), c.sigma_at(c.Z2 - 1e-3)}, pr, c.r);
    const Determinants dout =
        determinants({c.w_at(c.Z2 + 1e-3), c.sigma_at(c.Z2 + 1e-3)}, pr, c.r);
    CHECK(din.delta < 0.0);
    CHECK(dout.delta > 0.0);
}

TEST_CASE("completed curve: tail asymptotics") {
    const ProfileCurve& c = curve32();
    CHECK(std::fabs(c.tail_slope_w + c.r) < 1e-2);
    CHECK(std::fabs(c.tail_slope_sigma + c.r) < 1e-2);
    CHECK(c.c_w != 0.0);
    CHECK(c.c_sigma != 0.0);
    const double Zf = c.Z_max() * 0.5;
    CHECK(c.lam_w_at(Zf) / c.w_at(Zf) == doctest::Approx(-c.r).epsilon(1e-2));
}

TEST_CASE("tail constants are stable under tolerance halving") {
    const Parameters& pr = params32();
    const auto roots = shoot_speed_scan(pr, implode::testing::profile_options().shoot);
    REQUIRE_FALSE(roots.empty());

    ProfileOptions o1 = implode::testing::profile_options();
    o1.shoot.integ.rtol = 1e-10;
    ProfileOptions o2 = o1;
    o2.shoot.integ.rtol = 5e-11;
    const ProfileCurve c1 = build_curve_at_speed(pr, roots.back(), o1);
    const ProfileCurve c2 = build_curve_at_speed(pr, roots.back(), o2);
    CHECK(std::fabs(c1.c_w - c2.c_w) / std::fabs(c1.c_w) < 1e-6);
    CHECK(std::fabs(c1.c_sigma - c2.c_sigma) / std::fabs(c1.c_sigma) < 1e-6);
}

TEST_CASE("physical reconstruction") {
    const ProfileCurve& c = curve32();
    const PhysicalProfile& ph = physical32();
    const Parameters& pr = params32();

    CHECK(ph.rho_at(c.Z_min()) == doctest::Approx(1.0).epsilon(1e-7));
    for (double v : ph.rho) CHECK(v > 0.0);
    CHECK(ph.Psi.front() == doctest::Approx(-1.0 / (c.r - 2.0)).epsilon(1e-6));
    CHECK(std::fabs(ph.q_tail_slope + 2.0 * (c.r - 1.0)) < 1e-2);

    // Round trip (rho_P, Psi_P') -> (w, sigma).
    const double phi = 0.5 * std::sqrt(pr.ell);
    for (std::size_t i = 5; i < c.samples.size(); i += 97) {
        const auto& s = c.samples[i];
        const double w_back = -2.0 * ph.dPsi[i] / s.Z;
        const double sigma_back =
            std::pow(ph.rho[i], 0.5 * (pr.p - 1.0)) / (phi * s.Z);
        CHECK(std::fabs(w_back - s.w) < 1e-10 * (1.0 + std::fabs(s.w)));
        CHECK(std::fabs(sigma_back - s.sigma) < 1e-10 * (1.0 + s.sigma));
    }
}

TEST_CASE("reconstruction rejects sigma <= 0") {
    ProfileCurve broken = curve32();
    broken.samples[10].sigma = -1.0;
    CHECK_THROWS_AS(reconstruct_physical(broken, params32()), ProfileError);
}

TEST_CASE("dampened profile") {
    const PhysicalProfile& ph = physical32();
    const double n_P = 10.0, tau = 0.3;
    const DampenedProfile dp = dampen(ph, n_P, tau);

    for (std::size_t i = 0; i < dp.x.size(); i += 50) {
        if (dp.x[i] <= 5.0) {
            CHECK(dp.rho_D[i] == ph.rho[i]);
            CHECK(dp.u_D[i] == ph.dPsi[i]);
        }
        if (dp.x[i] >= 10.0) CHECK(dp.u_D[i] == 0.0);
    }

    // log-slope of rho_D at x ~ 1e3 equals -n_P.
    const double Zs = dp.Zstar;
    const double x1 = 950.0, x2 = 1050.0;
    REQUIRE(ph.Z.back() > x2 * Zs);
    const double slope =
        std::log(dp.rho_renorm(x2 * Zs) / dp.rho_renorm(x1 * Zs)) / std::log(x2 / x1);
    CHECK(std::fabs(slope + n_P) < 1e-3);

    // rho_D(tau, Z) = zeta(lambda Z) rho_P(Z).
    for (double Z : {0.5, 3.0, 8.0, 30.0}) {
        CHECK(dp.rho_renorm(Z) ==
              doctest::Approx(dp.zeta(Z / Zs) * ph.rho_at(Z)).epsilon(1e-12));
    }

    // Logarithmic-derivative bounds |Z^j d_Z^j rho_D / rho_D|^{1/j} <= 50 for
    // j = 1..3 (the tail forces Z^j rho^(j)/rho ~ n_P^j, so the uniform
    // constant applies to the j-th root).
    auto logrho = [&](double z) { return std::log(dp.rho_renorm(z)); };
    for (double Z = 0.5; Z < ph.Z.back() * 0.4; Z *= 1.9) {
        const double h = 1e-3 * Z;
        const double l1 = (logrho(Z + h) - logrho(Z - h)) / (2 * h);
        const double l2 = (logrho(Z + h) - 2 * logrho(Z) + logrho(Z - h)) / (h * h);
        const double l3 = (logrho(Z + 2 * h) - 2 * logrho(Z + h) +
                           2 * logrho(Z - h) - logrho(Z - 2 * h)) /
                          (2 * h * h * h);
        const double g1 = l1;
        const double g2 = l2 + l1 * l1;
        const double g3 = l3 + 3 * l1 * l2 + l1 * l1 * l1;
        CHECK(std::fabs(Z * g1) < 50.0);
        CHECK(std::pow(std::fabs(Z * Z * g2), 0.5) < 50.0);
        CHECK(std::pow(std::fabs(Z * Z * Z * g3), 1.0 / 3.0) < 50.0);
    }

    CHECK_THROWS_WITH_AS(dampen(ph, 0.1, tau),
                         doctest::Contains("non-integrable-energy"), ProfileError);
}

TEST_CASE("grid refinement converges at the integrator design order") {
    const Parameters& pr = params32();
    const double r = 1.25;
    const OriginSeries s = origin_series(pr, r, 8);
    const double Z_start = 0.1, Z_end = 1.2;
    const PhasePoint p0 = s.phase_at(Z_start, pr);

    RK45<2>::Rhs rhs = [&](double, const std::array<double, 2>& st) {
        const Determinants det = determinants({st[0], st[1]}, pr, r);
        return std::array<double, 2>{-det.delta1 / det.delta,
                                     -det.delta2 / det.delta};
    };
    auto run_fixed = [&](int n_steps) {
        RK45<2> solver;
        std::array<double, 2> y{p0.w, p0.sigma};
        double t = std::log(Z_start);
        const double h = (std::log(Z_end) - t) / n_steps;
        for (int i = 0; i < n_steps; ++i) solver.fixed_step(rhs, t, y, h);
        return y;
    };
    RK45<2> ref_solver;
    ref_solver.rtol = 1e-13;
    ref_solver.atol = 1e-15;
    std::array<double, 2> ref{p0.w, p0.sigma};
    {
        double t = std::log(Z_start);
        const double tend = std::log(Z_end);
        double h = 1e-3;
        while (t < tend) {
            auto res = ref_solver.try_step(rhs, t, ref, std::min(h, tend - t));
            h = res.h_next;
        }
    }

    const auto a = run_fixed(40);
    const auto b = run_fixed(80);
    const double ea = std::hypot(a[0] - ref[0], a[1] - ref[1]);
    const double eb = std::hypot(b[0] - ref[0], b[1] - ref[1]);
    const double slope = std::log2(ea / eb);
    CHECK(slope > 4.5);
    CHECK(slope < 5.5);
}

TEST_CASE("dense fields match the curve away from the seams") {
    const ProfileCurve& c = curve32();
    std::vector<double> grid;
    for (double Z = 0.0; Z < 6.0; Z += 0.01) grid.push_back(Z);
    const DenseFields df = dense_profile_fields(c, grid);
    for (std::size_t i = 20; i < grid.size(); i += 37) {
        if (grid[i] < c.Z_min() * 2.0) continue;
        // Past the crossing the slow-manifold instability amplifies the
        // difference between independent integrations; the two legs agree to
        // the amplified solver tolerance there.
        const bool swing_zone = grid[i] > c.Z2;
        const double tol = swing_zone ? 5e-5 : 1e-6;
        CHECK(std::fabs(df.w[i] - c.w_at(grid[i])) < tol);
        CHECK(std::fabs(df.sigma[i] - c.sigma_at(grid[i])) < tol);
    }
    CHECK(df.Psi.front() == doctest::Approx(-1.0 / (c.r - 2.0)).epsilon(1e-12));
}
