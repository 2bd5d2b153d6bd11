// Discretization of the linearized operator around the profile on [0, Z_a].
//
// The (Phi, Theta) system with the shifted time derivative
// Theta = dPhi/dtau + a H2 Lambda Phi reads dX/dtau = M X with
//   M = [ -a H2 L          1                                  ]
//       [ (p-1) Q Lap - (1-a)^2 H2^2 L^2 + A2t L + A3,  -(2-a) H2 L + A2 ]
// where L = Z d/dZ, Lap is the radial Laplacian, and
// A2t = A1 + (2a - a^2) H2 L H2 - a A2 H2. The discretization is Chebyshev
// collocation on [-Z_a, Z_a] folded onto (0, Z_a] by even symmetry; no
// boundary condition is imposed at Z_a (the principal coefficient -D_a
// degenerates there).

#ifndef IMPLODE_SPECTRAL_HPP
#define IMPLODE_SPECTRAL_HPP

#include <complex>
#include <vector>

#include "implode/linalg.hpp"
#include "implode/profile.hpp"

namespace implode {

struct LinearizedPotentials {
    std::vector<double> Z;
    std::vector<double> H1, H2, H3, Q;
    std::vector<double> A1, A2, A3;
    std::vector<double> H1_alt;  // (d w + Lambda w - d w_e)/2, the dual route
};

// Potentials sampled on a given grid (or a default log grid when empty).
LinearizedPotentials potentials(const PhysicalProfile& physical,
                                const ProfileCurve& curve,
                                std::vector<double> grid = {});

// Root of D_a = (1-a)^2 (w-1)^2 - sigma^2 near Z2; increasing in a.
double shifted_root(const ProfileCurve& curve, double a);

struct OperatorAssembly {
    double a = 0.0;
    double Z_a = 0.0;
    int N = 0;                  // collocation nodes on (0, Z_a]
    std::vector<double> nodes;  // ascending
    Matrix matrix;              // dense 2N x 2N acting on (Phi; Theta)
};

OperatorAssembly assemble(const ProfileCurve& curve, double a, int N);

struct EigenMode {
    std::complex<double> value;
    bool resolved = false;
    double tail_fraction = 0.0;  // Chebyshev-tail energy of the Phi part
};

struct SpectralReport {
    double a = 0.0;
    double Z_a = 0.0;
    int N = 0;
    double threshold = 0.0;  // modes with Re >= -threshold are listed
    std::vector<EigenMode> modes;          // at resolution N
    std::vector<EigenMode> modes_refined;  // at resolution 2N
    int unstable_count = 0;          // resolved modes with Re >= 0 at N
    int unstable_count_refined = 0;  // same at 2N
    bool counts_agree = false;
    double max_real = 0.0;  // largest Re over resolved modes at N
    bool eigensolver_converged = true;
};

SpectralReport unstable_spectrum(const ProfileCurve& curve, double a, int N,
                                 double threshold = 0.5);

// Chebyshev analysis helper shared with tests: even-extension coefficient
// tail fraction of nodal values given in ascending-Z order.
double cheb_tail_fraction(const std::vector<double>& values_re,
                          const std::vector<double>& values_im);

}  // namespace implode

#endif
