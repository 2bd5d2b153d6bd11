// Shared test fixture: the d=3, ell=2 profile computed once per binary.

#ifndef IMPLODE_TESTS_FIXTURE_HPP
#define IMPLODE_TESTS_FIXTURE_HPP

#include "implode/profile.hpp"

namespace implode::testing {

inline const Parameters& params32() {
    static const Parameters p = derive_from_ell(3, 2.0);
    return p;
}

inline const ProfileOptions& profile_options() {
    static const ProfileOptions opt = [] {
        ProfileOptions o;
        o.shoot.scan_points = 48;
        return o;
    }();
    return opt;
}

inline const ProfileCurve& curve32() {
    static const ProfileCurve c = compute_profile(params32(), profile_options());
    return c;
}

inline const PhysicalProfile& physical32() {
    static const PhysicalProfile ph = reconstruct_physical(curve32(), params32());
    return ph;
}

}  // namespace implode::testing

#endif
