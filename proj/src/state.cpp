#include "cqgrav/state.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>

namespace cqgrav {

Matrix LindbladBasis::op(int mu) const {
  if (mu == 0) return Matrix::Identity(dim, dim);
  return ops[mu - 1];
}

void LindbladBasis::validate(const Tolerances& tol) const {
  for (const auto& L : ops) {
    require(L.rows() == dim && L.cols() == dim, ErrorCode::DimensionMismatch,
            "Lindblad operator dimension mismatch");
    require(std::abs(L.trace()) <= tol.herm * std::max(1.0, max_abs(L)) * dim,
            ErrorCode::DimensionMismatch, "Lindblad operator is not traceless");
  }
  for (std::size_t a = 0; a < ops.size(); ++a) {
    for (std::size_t b = a + 1; b < ops.size(); ++b) {
      double scale = std::max(1.0, max_abs(ops[a]) * max_abs(ops[b])) * dim;
      require(std::abs((ops[a].adjoint() * ops[b]).trace()) <= tol.orth * scale,
              ErrorCode::DimensionMismatch, "Lindblad operators are not orthogonal");
    }
  }
}

ValidationReport validate_state(const CQState& state, const Tolerances& tol) {
  require(state.grid.cells() > 0, ErrorCode::DimensionMismatch, "empty grid");
  require(state.blocks.size() == state.grid.cells(), ErrorCode::DimensionMismatch,
          "block count does not match grid");
  ValidationReport rep;
  rep.min_eigenvalues.reserve(state.blocks.size());
  rep.herm_defects.reserve(state.blocks.size());
  double total = 0.0;
  double worst_eig = 0.0;
  double worst_herm = 0.0;
  bool pos_ok = true, herm_ok = true;
  for (const auto& b : state.blocks) {
    require(b.rows() == state.hilbert_dim && b.cols() == state.hilbert_dim,
            ErrorCode::DimensionMismatch, "block dimension mismatch");
    double hd = hermiticity_defect(b);
    double mineig = min_eigenvalue(b);
    double scale = std::max(max_abs(b), 1e-300);
    rep.herm_defects.push_back(hd);
    rep.min_eigenvalues.push_back(mineig);
    if (hd > tol.herm * std::max(1.0, scale)) herm_ok = false;
    if (mineig < -tol.psd * scale) pos_ok = false;
    worst_eig = std::min(worst_eig, mineig);
    worst_herm = std::max(worst_herm, hd);
    total += b.real().trace();
  }
  rep.norm_defect = std::abs(total * state.grid.cell_volume() - 1.0);
  rep.normalization_ok = rep.norm_defect <= tol.norm;
  rep.positivity_ok = pos_ok;
  rep.hermiticity_ok = herm_ok;
  rep.worst_min_eigenvalue = worst_eig;
  rep.worst_herm_defect = worst_herm;
  rep.passed = pos_ok && herm_ok && rep.normalization_ok;
  return rep;
}

RealVector classical_marginal(const CQState& state) {
  RealVector p(state.blocks.size());
  for (std::size_t k = 0; k < state.blocks.size(); ++k) p(k) = state.blocks[k].real().trace();
  return p;
}

Matrix quantum_marginal(const CQState& state) {
  Matrix sum = Matrix::Zero(state.hilbert_dim, state.hilbert_dim);
  for (const auto& b : state.blocks) sum += b;
  return sum * state.grid.cell_volume();
}

Complex expectation(const CQState& state, const HybridOperator& obs) {
  require(state.grid.same_shape(obs.grid), ErrorCode::DimensionMismatch,
          "observable grid does not match state grid");
  require(obs.blocks.size() == state.blocks.size(), ErrorCode::DimensionMismatch,
          "observable block count mismatch");
  Complex acc(0.0, 0.0);
  for (std::size_t k = 0; k < state.blocks.size(); ++k) {
    require(obs.blocks[k].rows() == state.hilbert_dim, ErrorCode::DimensionMismatch,
            "observable block dimension mismatch");
    acc += (obs.blocks[k] * state.blocks[k]).trace();
  }
  return acc * state.grid.cell_volume();
}

CPTransition CPTransition::identity_map(const PhaseSpaceGrid& grid, int p) {
  CPTransition t;
  t.cells = grid.cells();
  t.p = p;
  t.lambda.assign(t.cells * t.cells, Matrix::Zero(p + 1, p + 1));
  for (std::size_t k = 0; k < t.cells; ++k)
    t.at(k, k)(0, 0) = Complex(1.0 / grid.cell_volume(), 0.0);
  return t;
}

CQState apply_cp_map(const CQState& state, const CPTransition& transition,
                     const LindbladBasis& basis, const Tolerances& tol) {
  const std::size_t K = state.grid.cells();
  require(transition.cells == K, ErrorCode::DimensionMismatch,
          "transition cell count does not match state grid");
  const int p = transition.p;
  require(basis.count() == p, ErrorCode::DimensionMismatch, "basis size != transition index range");
  require(basis.dim == state.hilbert_dim, ErrorCode::DimensionMismatch,
          "basis dimension != state dimension");
  const double vol = state.grid.cell_volume();
  const int d = state.hilbert_dim;

  // Complete positivity: every block PSD.
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < K; ++j) {
      const Matrix& lam = transition.at(k, j);
      require(lam.rows() == p + 1 && lam.cols() == p + 1, ErrorCode::DimensionMismatch,
              "transition block has wrong shape");
      double scale = std::max(max_abs(lam), 1e-300);
      if (hermiticity_defect(lam) > tol.herm * std::max(1.0, scale) ||
          min_eigenvalue(lam) < -tol.psd * scale) {
        std::ostringstream os;
        os << "Lambda(" << k << "|" << j << ") is not PSD";
        fail(ErrorCode::NotCompletelyPositive, os.str());
      }
    }
  }

  // Normalization: sum_k vol Lambda^{mu nu}(k|j) L_nu^dag L_mu = I for all j.
  std::vector<Matrix> LdagL((p + 1) * (p + 1));
  for (int mu = 0; mu <= p; ++mu)
    for (int nu = 0; nu <= p; ++nu)
      LdagL[mu * (p + 1) + nu] = basis.op(nu).adjoint() * basis.op(mu);
  for (std::size_t j = 0; j < K; ++j) {
    Matrix m = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < K; ++k) {
      const Matrix& lam = transition.at(k, j);
      for (int mu = 0; mu <= p; ++mu)
        for (int nu = 0; nu <= p; ++nu)
          m += vol * lam(mu, nu) * LdagL[mu * (p + 1) + nu];
    }
    if ((m - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol.norm) {
      std::ostringstream os;
      os << "normalization defect at source cell " << j;
      fail(ErrorCode::NotTracePreserving, os.str());
    }
  }

  CQState out;
  out.grid = state.grid;
  out.hilbert_dim = d;
  out.blocks.assign(K, Matrix::Zero(d, d));
  for (std::size_t k = 0; k < K; ++k) {
    Matrix acc = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < K; ++j) {
      const Matrix& lam = transition.at(k, j);
      for (int mu = 0; mu <= p; ++mu) {
        for (int nu = 0; nu <= p; ++nu) {
          if (lam(mu, nu) == Complex(0.0, 0.0)) continue;
          acc += vol * lam(mu, nu) * (basis.op(mu) * state.blocks[j] * basis.op(nu).adjoint());
        }
      }
    }
    out.blocks[k] = hermitize(acc);
  }
  return out;
}

}  // namespace cqgrav
