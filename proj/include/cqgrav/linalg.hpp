#ifndef CQGRAV_LINALG_HPP
#define CQGRAV_LINALG_HPP

#include <Eigen/Dense>
#include <complex>

namespace cqgrav {

using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double hermiticity_defect(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const RealMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Smallest eigenvalue of a (nearly) Hermitian matrix.
double min_eigenvalue(const Matrix& m);
double min_eigenvalue(const RealMatrix& m);

/// Moore-Penrose pseudo-inverse of a Hermitian matrix via eigendecomposition.
/// Eigenvalues below rank_tol * max|eig| are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rank_tol = 1e-12);
RealMatrix pseudo_inverse(const RealMatrix& m, double rank_tol = 1e-12);

/// Symmetric PSD square root (negative eigenvalues clamped to zero).
RealMatrix psd_sqrt(const RealMatrix& m);
Matrix psd_sqrt(const Matrix& m);

/// Spectral (operator 2-) norm.
double spectral_norm(const Matrix& m);

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
inline Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

}  // namespace cqgrav

#endif
