// Dense real matrices and a nonsymmetric eigensolver (Householder
// Hessenberg reduction followed by the shifted QR iteration with Schur
// vector accumulation and quasi-triangular back-substitution). The layout
// follows the classical EISPACK/JAMA structure.

#ifndef IMPLODE_LINALG_HPP
#define IMPLODE_LINALG_HPP

#include <complex>
#include <vector>

namespace implode {

class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    double& operator()(int i, int j) { return a_[i * cols_ + j]; }
    double operator()(int i, int j) const { return a_[i * cols_ + j]; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    static Matrix identity(int n);
    Matrix operator*(const Matrix& other) const;
    std::vector<double> operator*(const std::vector<double>& x) const;

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

struct EigenResult {
    std::vector<std::complex<double>> values;
    // Right eigenvectors, one per eigenvalue, in the original basis.
    std::vector<std::vector<std::complex<double>>> vectors;
    bool converged = true;
};

// Full eigendecomposition of a dense real matrix (not assumed symmetric).
// with_vectors = false skips the eigenvector back-substitution.
EigenResult eigen_dense(const Matrix& A, bool with_vectors = true);

}  // namespace implode

#endif
