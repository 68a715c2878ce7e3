#include "cqgrav/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace cqgrav {

double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double min_eigenvalue(const RealMatrix& m) {
  if (m.rows() == 0) return 0.0;
  RealMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix pseudo_inverse(const Matrix& m, double rank_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  const auto& vals = es.eigenvalues();
  double cutoff = rank_tol * vals.cwiseAbs().maxCoeff();
  Vector inv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    inv(i) = (std::abs(vals(i)) > cutoff && cutoff > 0.0) ? Complex(1.0 / vals(i), 0.0)
                                                          : Complex(0.0, 0.0);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

RealMatrix pseudo_inverse(const RealMatrix& m, double rank_tol) {
  RealMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
  const auto& vals = es.eigenvalues();
  double cutoff = rank_tol * vals.cwiseAbs().maxCoeff();
  RealVector inv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    inv(i) = (std::abs(vals(i)) > cutoff && cutoff > 0.0) ? 1.0 / vals(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

RealMatrix psd_sqrt(const RealMatrix& m) {
  RealMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
  RealVector vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace cqgrav
