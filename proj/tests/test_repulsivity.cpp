#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "implode/repulsivity.hpp"

using namespace implode;
using implode::testing::curve32;
using implode::testing::params32;

TEST_CASE("lambda fields: F vanishes at the origin and tracks the tail") {
    const ProfileCurve& c = curve32();
    const LambdaFields lf = lambda_fields(c);

    // F = sigma + Lambda sigma = d(Z sigma)/dZ -> 0 as Z -> 0 since
    // Z sigma tends to the constant 2/sqrt(ell).
    CHECK(std::fabs(lf.F.front()) < 1e-4);

    // Far field: Lambda w / w -> -r.
    const std::size_t k = lf.Z.size() - 5;
    CHECK(lf.lam_w[k] / c.w_at(lf.Z[k]) == doctest::Approx(-c.r).epsilon(1e-2));
}

TEST_CASE("discriminant identity (p-1)(dQ/dZ)^2/Q = 4F^2 on the grid") {
    const ProfileCurve& c = curve32();
    const Parameters& pr = params32();
    const double phi2 = pr.ell / 4.0;

    // dQ/dZ from a numerical derivative of the interpolated Q; F from the
    // stored Lambda fields. Checked to the curve's discretization tolerance.
    auto Q_at = [&](double Z) {
        const double s = c.sigma_at(Z);
        return phi2 * Z * Z * s * s;
    };
    int checked = 0;
    for (std::size_t i = 10; i + 10 < c.samples.size(); i += 23) {
        const double Z = c.samples[i].Z;
        const double h = 1e-4 * Z;
        const double dQ = (Q_at(Z + h) - Q_at(Z - h)) / (2 * h);
        const double lhs = (pr.p - 1.0) * dQ * dQ / Q_at(Z);
        const double F = c.samples[i].sigma + c.samples[i].lam_sigma;
        const double rhs = 4.0 * F * F;
        // Grid tolerance: the left side differentiates the interpolated Q;
        // the arc-to-tail junction carries the (documented) transverse
        // landing offset of ~1e-5.
        CHECK(std::fabs(lhs - rhs) < 5e-5 * (1.0 + std::fabs(rhs)));
        ++checked;
    }
    CHECK(checked > 20);
}

TEST_CASE("margins: repulsivity holds for the found profile") {
    const RepulsivityReport rep = margins(curve32(), params32());

    CHECK(rep.inside_q1.positive);
    CHECK(rep.inside_q2.positive);
    CHECK(rep.inside_q1.value > 0.0);
    CHECK(rep.inside_q2.value > 0.0);

    // d=3, ell=2 > sqrt(3): the outside property (P) is asserted too.
    CHECK(rep.ns_regime);
    CHECK(rep.outside_q1.positive);
    CHECK(rep.outside_qout.positive);
    CHECK(rep.tail_floor > 0.0);
    CHECK(rep.inside_ok);
    CHECK(rep.outside_ok);

    // 1 - w - Lambda w -> 1 at infinity.
    const ProfileCurve& c = curve32();
    const double Zf = c.Z_max() * 0.9;
    CHECK(1.0 - c.w_at(Zf) - c.lam_w_at(Zf) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("margins stable under evaluation-grid halving") {
    const RepulsivityReport r1 = margins(curve32(), params32(), 4096);
    const RepulsivityReport r2 = margins(curve32(), params32(), 8192);
    CHECK(std::fabs(r1.inside_q1.value - r2.inside_q1.value) < 1e-4);
    CHECK(std::fabs(r1.inside_q2.value - r2.inside_q2.value) < 1e-4);
    CHECK(std::fabs(r1.outside_q1.value - r2.outside_q1.value) < 1e-4);
    CHECK(std::fabs(r1.outside_qout.value - r2.outside_qout.value) < 1e-4);
}

TEST_CASE("surface gravity") {
    const ProfileCurve& c = curve32();
    const RepulsivityReport rep = margins(c, params32());

    CHECK(rep.kappa > 0.0);
    // The two routes agree: -(w' + sigma') vs 1 - w - Lw - (1-w) F / sigma.
    CHECK(rep.kappa == doctest::Approx(rep.kappa_alt).epsilon(1e-8));
    CHECK(surface_gravity(c) == doctest::Approx(rep.kappa).epsilon(1e-14));

    // kappa equals the inside q2 expression evaluated at Z2.
    const double w2 = c.crossing.w2, s2 = c.crossing.sigma2;
    const double lw = c.crossing.lam_limit[0], ls = c.crossing.lam_limit[1];
    const double q2_at_Z2 = 1.0 - w2 - lw - (1.0 - w2) * (s2 + ls) / s2;
    CHECK(rep.kappa == doctest::Approx(q2_at_Z2).epsilon(1e-12));
}

TEST_CASE("characteristic speeds") {
    const ProfileCurve& c = curve32();
    const CharacteristicSpeeds cs = characteristic_speeds(c);

    REQUIRE(cs.zero_crossings.size() == 1);
    CHECK_FALSE(cs.multi_sonic);
    CHECK(cs.zero_crossings[0] == doctest::Approx(c.Z2).epsilon(1e-6));

    for (std::size_t i = 0; i < cs.Z.size(); ++i) {
        CHECK(cs.Lbar[i] > 0.0);
        if (cs.Z[i] < c.Z2 * 0.999) CHECK(cs.L[i] < 0.0);
        if (cs.Z[i] > c.Z2 * 1.001) CHECK(cs.L[i] > 0.0);
    }
}
