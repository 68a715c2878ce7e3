#include "cqgrav/tradeoff.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "cqgrav/rng.hpp"

namespace cqgrav {

namespace {

TradeoffVerdict verdict_from_blocks(const Matrix& D0, const Matrix& D1, const Matrix& D2,
                                    const Tolerances& tol) {
  const Eigen::Index w = D2.rows();
  const Eigen::Index p = D0.rows();
  Matrix block = Matrix::Zero(w + p, w + p);
  block.topLeftCorner(w, w) = 2.0 * D2;
  block.topRightCorner(w, p) = D1;
  block.bottomLeftCorner(p, w) = D1.adjoint();
  block.bottomRightCorner(p, p) = D0;

  TradeoffVerdict v;
  v.scale = std::max(max_abs(block), 1e-300);
  v.min_eigenvalue = min_eigenvalue(block);
  v.satisfied = v.min_eigenvalue >= -tol.psd * v.scale;

  Matrix d0_pinv = pseudo_inverse(D0, tol.rank);
  Matrix schur = 2.0 * D2 - D1 * d0_pinv * D1.adjoint();
  double schur_min = min_eigenvalue(schur);
  v.schur_defect = schur_min < 0.0 ? -schur_min : 0.0;
  if (v.satisfied && v.schur_defect <= tol.psd * v.scale) v.schur_defect = 0.0;
  Matrix outside = D1 * (Matrix::Identity(p, p) - D0 * d0_pinv);
  v.support_defect = spectral_norm(outside);
  return v;
}

}  // namespace

Matrix generalized_inverse(const Matrix& m, double rank_tol, const Tolerances& tol) {
  double scale = std::max(max_abs(m), 1e-300);
  require(hermiticity_defect(m) <= tol.herm * std::max(1.0, scale), ErrorCode::NotHermitian,
          "generalized inverse requires a Hermitian matrix");
  return pseudo_inverse(m, rank_tol);
}

TradeoffVerdict check_coupling_tradeoff(const Matrix& D0, const Matrix& D1_br, const Matrix& D2,
                                        const Tolerances& tol) {
  const Eigen::Index p = D0.rows();
  require(D0.cols() == p, ErrorCode::ShapeMismatch, "D0 must be square");
  require(D2.rows() == D2.cols(), ErrorCode::ShapeMismatch, "D2 must be square");
  require(D1_br.rows() == D2.rows() && D1_br.cols() == p, ErrorCode::ShapeMismatch,
          "D1 back-reaction must be (p+1)n x p");
  return verdict_from_blocks(D0, D1_br, D2, tol);
}

Matrix saturating_D2(const Matrix& D0, const Matrix& D1_br, const Tolerances& tol) {
  const Eigen::Index p = D0.rows();
  require(D1_br.cols() == p, ErrorCode::ShapeMismatch, "D1 back-reaction must have p columns");
  Matrix d0_pinv = generalized_inverse(D0, tol.rank, tol);
  Matrix outside = D1_br * (Matrix::Identity(p, p) - D0 * d0_pinv);
  double scale = std::max({max_abs(D1_br), max_abs(D0), 1e-300});
  require(spectral_norm(outside) <= tol.support * scale, ErrorCode::SupportViolation,
          "back-reaction outside the support of D0");
  return hermitize(0.5 * D1_br * d0_pinv * D1_br.adjoint());
}

ObservationalTradeoff observational_tradeoff(const CQState& state, const GeneratorSpec& gen,
                                             const HybridOperator* H_I, const Tolerances& tol) {
  require(gen.basis.dim == state.hilbert_dim, ErrorCode::ShapeMismatch,
          "generator dimension does not match state");
  const int n = state.grid.dim();
  const int p = gen.basis.count();
  const double vol = state.grid.cell_volume();

  std::vector<Matrix> ops;
  for (int mu = 0; mu <= p; ++mu) ops.push_back(gen.basis.op(mu));

  double d0_mean = 0.0;
  RealMatrix d2_mean = RealMatrix::Zero(n, n);
  Vector d1_br = Vector::Zero(n);
  Vector d1_total = Vector::Zero(n);

  for (std::size_t k = 0; k < state.blocks.size(); ++k) {
    MomentSet mo = gen.cell_dependent() ? gen.moments_at(state.grid.point(k)) : gen.constant;
    const Matrix& rho = state.blocks[k];
    // Tr(L_mu rho L_nu^dag) table
    Matrix tr(p + 1, p + 1);
    for (int mu = 0; mu <= p; ++mu)
      for (int nu = 0; nu <= p; ++nu) tr(mu, nu) = (ops[nu].adjoint() * ops[mu] * rho).trace();
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) d0_mean += vol * (mo.D0(a, b) * tr(a + 1, b + 1)).real();
    for (int i = 0; i < n; ++i) {
      for (int mu = 0; mu <= p; ++mu) {
        for (int nu = 0; nu <= p; ++nu) {
          Complex c = mo.D1[i](mu, nu) * tr(mu, nu);
          if (mu != 0 || nu != 0) d1_total(i) += vol * c;
          if (nu != 0) d1_br(i) += vol * c;
        }
      }
      for (int j = 0; j < n; ++j) {
        Complex acc(0.0, 0.0);
        for (int mu = 0; mu <= p; ++mu)
          for (int nu = 0; nu <= p; ++nu) acc += mo.d2(i, j)(mu, nu) * tr(mu, nu);
        d2_mean(i, j) += vol * acc.real();
      }
    }
  }
  d2_mean = 0.5 * (d2_mean + d2_mean.transpose()).eval();

  ObservationalTradeoff out;
  out.d0_expectation = d0_mean;
  out.d2_expectation = d2_mean;
  out.d1_br_expectation = d1_br;
  out.d1_total_expectation = d1_total;

  Matrix d2c = d2_mean.cast<Complex>();
  auto rank1_check = [&](double factor, const Vector& drift) {
    Matrix m = factor * d2c * d0_mean - drift * drift.adjoint();
    TradeoffVerdict v;
    v.scale = std::max(max_abs(m), 1e-300);
    v.min_eigenvalue = min_eigenvalue(m);
    v.satisfied = v.min_eigenvalue >= -tol.psd * v.scale;
    v.schur_defect = v.satisfied ? 0.0 : -v.min_eigenvalue;
    return v;
  };

  out.back_reaction = rank1_check(2.0, d1_br);
  out.total_drift_reported = rank1_check(8.0, d1_total);
  if (gen.source == BackReactionSource::IdentityCross ||
      gen.source == BackReactionSource::LindbladBlock)
    out.total_drift = out.total_drift_reported;

  if (H_I != nullptr) {
    require(n % 2 == 0, ErrorCode::ShapeMismatch,
            "Hamiltonian form needs (q,p)-paired axes");
    require(H_I->blocks.size() == state.blocks.size(), ErrorCode::ShapeMismatch,
            "H_I block count mismatch");
    // omega . dH_I/dz: for each (q,p) pair, (dH/dp, -dH/dq).
    Vector v = Vector::Zero(n);
    for (std::size_t k = 0; k < state.blocks.size(); ++k) {
      for (int j = 0; j < n; ++j) {
        std::size_t up = state.grid.neighbor(k, j, +1);
        std::size_t dn = state.grid.neighbor(k, j, -1);
        double h = state.grid.axis(j).width();
        Matrix dH;
        if (up != PhaseSpaceGrid::npos && dn != PhaseSpaceGrid::npos)
          dH = (H_I->blocks[up] - H_I->blocks[dn]) / (2.0 * h);
        else if (up != PhaseSpaceGrid::npos)
          dH = (H_I->blocks[up] - H_I->blocks[k]) / h;
        else if (dn != PhaseSpaceGrid::npos)
          dH = (H_I->blocks[k] - H_I->blocks[dn]) / h;
        else
          dH = Matrix::Zero(state.hilbert_dim, state.hilbert_dim);
        int target = (j % 2 == 0) ? j + 1 : j - 1;       // q_i <-> p_i
        double sign = (j % 2 == 0) ? -1.0 : 1.0;         // pdot = -dH/dq, qdot = +dH/dp
        v(target) += sign * vol * (dH * state.blocks[k]).trace();
      }
    }
    out.hamiltonian_form = rank1_check(8.0, v);
  }
  return out;
}

TradeoffVerdict check_kernel_tradeoff(const DiscretizedKernel& D0_kernel,
                                      const RealVector& D1_local,
                                      const DiscretizedKernel& D2_kernel, const Tolerances& tol,
                                      int smeared_probes, std::uint64_t probe_seed) {
  require_same_grid(D0_kernel.grid, D2_kernel.grid, "kernel grids differ");
  const std::size_t s = D0_kernel.grid.size();
  require(static_cast<std::size_t>(D1_local.size()) == s, ErrorCode::GridMismatch,
          "local drift size does not match grid");
  require(s <= 4096, ErrorCode::GridMismatch,
          "kernel trade-off block check limited to grids with <= 4096 sites");
  const double vol = D0_kernel.grid.cell_volume();

  RealMatrix D0m = D0_kernel.materialize(s);
  RealMatrix D2m = D2_kernel.materialize(s);
  // delta(x,y) D1(x) -> diag(D1)/vol on the grid.
  Matrix D1 = (D1_local / vol).cast<Complex>().asDiagonal();
  TradeoffVerdict v =
      verdict_from_blocks(D0m.cast<Complex>(), D1, D2m.cast<Complex>(), tol);

  // Smeared inequality on randomized test vectors alpha(x):
  //   int int alpha D1 D0^-1 D1 alpha <= 2 int int alpha D2 alpha.
  RealMatrix d0_pinv_kernel = pseudo_inverse(D0m, tol.rank) / (vol * vol);
  Rng rng(probe_seed);
  double worst = 0.0;
  for (int t = 0; t < smeared_probes; ++t) {
    RealVector alpha(s);
    for (std::size_t i = 0; i < s; ++i) alpha(i) = rng.normal();
    RealVector da = D1_local.cwiseProduct(alpha);
    double lhs = vol * vol * da.dot(d0_pinv_kernel * da);
    double rhs = 2.0 * vol * vol * alpha.dot(D2m * alpha);
    double margin = (rhs - lhs) / (vol * vol * alpha.squaredNorm());
    worst = std::min(worst, margin);
  }
  if (worst < -tol.psd * v.scale) {
    v.satisfied = false;
    v.schur_defect = std::max(v.schur_defect, -worst);
  }
  return v;
}

double spatially_averaged_bound(const RealVector& mean_mass, const SpatialGrid& grid,
                                double lambda, AveragedBoundMode mode,
                                const std::array<double, 3>& query_point,
                                const Constants& constants) {
  require(lambda > 0.0, ErrorCode::MissingDecoherenceRate, "need a decoherence rate > 0");
  require(static_cast<std::size_t>(mean_mass.size()) == grid.size(), ErrorCode::GridMismatch,
          "mass field size does not match grid");
  const double vol = grid.cell_volume();
  if (mode == AveragedBoundMode::TotalMass) {
    double M = vol * mean_mass.sum();
    return M * M / (16.0 * lambda);
  }
  double phi = 0.0;
  const double r_reg = grid.cell_radius();
  for (std::size_t a = 0; a < grid.size(); ++a) {
    auto x = grid.position(a);
    double dx = x[0] - query_point[0], dy = x[1] - query_point[1], dz = x[2] - query_point[2];
    double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    double inv = (r < r_reg) ? 1.5 / r_reg : 1.0 / r;
    phi += -constants.G * vol * mean_mass(a) * inv;
  }
  return phi * phi / (16.0 * constants.G * constants.G * lambda);
}

}  // namespace cqgrav
