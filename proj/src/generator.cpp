#include "cqgrav/generator.hpp"

#include <cmath>
#include <sstream>

namespace cqgrav {

MomentSet MomentSet::zero(int p, int n, int d) {
  MomentSet m;
  m.p = p;
  m.n = n;
  m.D0 = Matrix::Zero(p, p);
  m.D1.assign(n, Matrix::Zero(p + 1, p + 1));
  m.D2.assign(static_cast<std::size_t>(n) * n, Matrix::Zero(p + 1, p + 1));
  m.H = Matrix::Zero(d, d);
  return m;
}

Matrix MomentSet::d2_block() const {
  const int w = (p + 1) * n;
  Matrix big = Matrix::Zero(w, w);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      big.block(i * (p + 1), j * (p + 1), p + 1, p + 1) = d2(i, j);
  return big;
}

Matrix MomentSet::d1_back_reaction() const {
  Matrix br = Matrix::Zero((p + 1) * n, p);
  for (int i = 0; i < n; ++i)
    for (int mu = 0; mu <= p; ++mu)
      for (int alpha = 1; alpha <= p; ++alpha)
        br(i * (p + 1) + mu, alpha - 1) = D1[i](mu, alpha);
  return br;
}

void MomentSet::validate(const Tolerances& tol) const {
  require(D0.rows() == p && D0.cols() == p, ErrorCode::ShapeMismatch, "D0 must be p x p");
  double s0 = std::max(max_abs(D0), 1e-300);
  require(hermiticity_defect(D0) <= tol.herm * std::max(1.0, s0), ErrorCode::NotHermitian,
          "D0 is not Hermitian");
  require(min_eigenvalue(D0) >= -tol.psd * s0, ErrorCode::InvalidCoupling, "D0 is not PSD");
  require(static_cast<int>(D1.size()) == n, ErrorCode::ShapeMismatch, "D1 needs n entries");
  for (const auto& m : D1) {
    require(m.rows() == p + 1 && m.cols() == p + 1, ErrorCode::ShapeMismatch,
            "D1 entries must be (p+1) x (p+1)");
    require(m.allFinite(), ErrorCode::InvalidCoupling, "D1 has non-finite entries");
  }
  require(D2.size() == static_cast<std::size_t>(n) * n, ErrorCode::ShapeMismatch,
          "D2 needs n*n entries");
  Matrix big = d2_block();
  double s2 = std::max(max_abs(big), 1e-300);
  require(hermiticity_defect(big) <= tol.herm * std::max(1.0, s2), ErrorCode::NotHermitian,
          "D2 block matrix is not Hermitian");
  require(min_eigenvalue(big) >= -tol.psd * s2, ErrorCode::InvalidCoupling,
          "D2 block matrix is not PSD");
}

Matrix hamiltonian_from_couplings(const Vector& d0_mu0, const LindbladBasis& basis) {
  require(d0_mu0.size() == basis.count() + 1, ErrorCode::ShapeMismatch,
          "need one coupling per basis operator");
  const int d = basis.dim;
  Matrix H = Matrix::Zero(d, d);
  const Complex I(0.0, 1.0);
  for (int mu = 0; mu <= basis.count(); ++mu) {
    Matrix L = basis.op(mu);
    H += 0.5 * I * (d0_mu0(mu) * L - std::conj(d0_mu0(mu)) * L.adjoint());
  }
  return hermitize(H);
}

GeneratorSpec GeneratorSpec::from_constant(LindbladBasis basis, MomentSet moments,
                                           int truncation_order) {
  require(truncation_order == 1 || truncation_order == 2, ErrorCode::ShapeMismatch,
          "truncation_order must be 1 or 2");
  GeneratorSpec g;
  g.basis = std::move(basis);
  g.constant = std::move(moments);
  g.truncation_order = truncation_order;
  return g;
}

namespace {

using Field = std::vector<Matrix>;

// Zero-flux first derivative along `axis` (interface fluxes are averaged
// neighbors, zero at the domain boundary); telescoping keeps sum_k out = 0.
Field flux_derivative(const PhaseSpaceGrid& g, const Field& A, int axis) {
  const double h = g.axis(axis).width();
  Field out(A.size());
  for (std::size_t k = 0; k < A.size(); ++k) {
    std::size_t right = g.neighbor(k, axis, +1);
    std::size_t left = g.neighbor(k, axis, -1);
    Matrix fp = (right == PhaseSpaceGrid::npos) ? Matrix::Zero(A[k].rows(), A[k].cols())
                                                : Matrix(0.5 * (A[k] + A[right]));
    Matrix fm = (left == PhaseSpaceGrid::npos) ? Matrix::Zero(A[k].rows(), A[k].cols())
                                               : Matrix(0.5 * (A[left] + A[k]));
    out[k] = (fp - fm) / h;
  }
  return out;
}

// Compact second derivative with zero boundary gradients.
Field flux_second_derivative(const PhaseSpaceGrid& g, const Field& B, int axis) {
  const double h = g.axis(axis).width();
  Field out(B.size());
  for (std::size_t k = 0; k < B.size(); ++k) {
    std::size_t right = g.neighbor(k, axis, +1);
    std::size_t left = g.neighbor(k, axis, -1);
    Matrix gp = (right == PhaseSpaceGrid::npos) ? Matrix::Zero(B[k].rows(), B[k].cols())
                                                : Matrix((B[right] - B[k]) / h);
    Matrix gm = (left == PhaseSpaceGrid::npos) ? Matrix::Zero(B[k].rows(), B[k].cols())
                                               : Matrix((B[k] - B[left]) / h);
    out[k] = (gp - gm) / h;
  }
  return out;
}

struct StepContext {
  const CQState* state;
  const GeneratorSpec* gen;
  std::vector<MomentSet> moments;  // one per cell (single entry when constant)
  std::vector<Matrix> ops;         // L_mu, mu = 0..p
  const MomentSet& at(std::size_t k) const {
    return moments.size() == 1 ? moments[0] : moments[k];
  }
};

StepContext make_context(const CQState& state, const GeneratorSpec& gen) {
  StepContext ctx;
  ctx.state = &state;
  ctx.gen = &gen;
  const int p = gen.basis.count();
  ctx.ops.reserve(p + 1);
  for (int mu = 0; mu <= p; ++mu) ctx.ops.push_back(gen.basis.op(mu));
  if (gen.cell_dependent()) {
    ctx.moments.reserve(state.grid.cells());
    for (std::size_t k = 0; k < state.grid.cells(); ++k)
      ctx.moments.push_back(gen.moments_at(state.grid.point(k)));
  } else {
    ctx.moments.push_back(gen.constant);
  }
  return ctx;
}

// sum_{mu nu} C(mu, nu) L_mu rho L_nu^dag for a (p+1)x(p+1) coefficient matrix.
Matrix sandwich(const StepContext& ctx, const Matrix& coeff, const Matrix& rho) {
  const int d = static_cast<int>(rho.rows());
  Matrix acc = Matrix::Zero(d, d);
  const int m = static_cast<int>(coeff.rows());
  for (int mu = 0; mu < m; ++mu) {
    for (int nu = 0; nu < m; ++nu) {
      Complex c = coeff(mu, nu);
      if (c == Complex(0.0, 0.0)) continue;
      acc += c * (ctx.ops[mu] * rho * ctx.ops[nu].adjoint());
    }
  }
  return acc;
}

// Local part: -i[H, rho] + Lindblad dissipator with D0.
Field local_rhs(const StepContext& ctx, const Field& blocks) {
  const int p = ctx.gen->basis.count();
  const Complex I(0.0, 1.0);
  Field out(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const MomentSet& mo = ctx.at(k);
    const Matrix& rho = blocks[k];
    Matrix r = -I * commutator(mo.H, rho);
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        Complex c = mo.D0(a, b);
        if (c == Complex(0.0, 0.0)) continue;
        const Matrix& La = ctx.ops[a + 1];
        const Matrix& Lb = ctx.ops[b + 1];
        Matrix LbdLa = Lb.adjoint() * La;
        r += c * (La * rho * Lb.adjoint() - 0.5 * anticommutator(LbdLa, rho));
      }
    }
    out[k] = std::move(r);
  }
  return out;
}

// Derivative part: -d_i(D1_i L rho L) + d_i d_j(D2_ij L rho L), all mu nu.
Field derivative_rhs(const StepContext& ctx, const Field& blocks) {
  const PhaseSpaceGrid& grid = ctx.state->grid;
  const int n = grid.dim();
  const int d = ctx.state->hilbert_dim;
  Field out(blocks.size(), Matrix::Zero(d, d));
  if (ctx.gen->truncation_order < 1) return out;

  for (int i = 0; i < n; ++i) {
    Field A(blocks.size());
    bool any = false;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const MomentSet& mo = ctx.at(k);
      A[k] = sandwich(ctx, mo.D1[i], blocks[k]);
      any = any || max_abs(mo.D1[i]) > 0.0;
    }
    if (!any) continue;
    Field dA = flux_derivative(grid, A, i);
    for (std::size_t k = 0; k < blocks.size(); ++k) out[k] -= dA[k];
  }

  if (ctx.gen->truncation_order < 2) return out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Field B(blocks.size());
      bool any = false;
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        const MomentSet& mo = ctx.at(k);
        B[k] = sandwich(ctx, mo.d2(i, j), blocks[k]);
        any = any || max_abs(mo.d2(i, j)) > 0.0;
      }
      if (!any) continue;
      if (i == j) {
        Field d2B = flux_second_derivative(grid, B, i);
        for (std::size_t k = 0; k < blocks.size(); ++k) out[k] += d2B[k];
      } else {
        Field dB = flux_derivative(grid, B, j);
        Field d2B = flux_derivative(grid, dB, i);
        for (std::size_t k = 0; k < blocks.size(); ++k) out[k] += d2B[k];
      }
    }
  }
  return out;
}

void guard_positivity(const Field& blocks, double dt, const Tolerances& tol) {
  double scale = 1e-300;
  for (const auto& b : blocks) scale = std::max(scale, max_abs(b));
  for (const auto& b : blocks) {
    double mineig = min_eigenvalue(b);
    if (mineig < -tol.step_guard * scale) {
      std::ostringstream os;
      os << "explicit step with dt=" << dt << " drove min eigenvalue to " << mineig;
      fail(ErrorCode::StepTooLarge, os.str());
    }
  }
}

}  // namespace

CQState step_master(const CQState& state, const GeneratorSpec& gen, double dt,
                    StepMethod method, const Tolerances& tol) {
  require(dt > 0.0, ErrorCode::StepTooLarge, "dt must be positive");
  require(gen.basis.dim == state.hilbert_dim, ErrorCode::DimensionMismatch,
          "generator basis dimension != state dimension");
  StepContext ctx = make_context(state, gen);
  for (const auto& mo : ctx.moments) {
    require(mo.n == state.grid.dim(), ErrorCode::DimensionMismatch,
            "moment classical dimension != grid dimension");
    require(mo.p == gen.basis.count(), ErrorCode::DimensionMismatch,
            "moment Lindblad count != basis size");
  }

  Field next = state.blocks;
  if (method == StepMethod::Euler) {
    Field loc = local_rhs(ctx, next);
    Field der = derivative_rhs(ctx, next);
    for (std::size_t k = 0; k < next.size(); ++k)
      next[k] = hermitize(next[k] + dt * (loc[k] + der[k]));
  } else {
    // Strang splitting: half classical transport, full quantum-local, half transport.
    Field der = derivative_rhs(ctx, next);
    for (std::size_t k = 0; k < next.size(); ++k) next[k] += 0.5 * dt * der[k];
    Field loc = local_rhs(ctx, next);
    for (std::size_t k = 0; k < next.size(); ++k) next[k] += dt * loc[k];
    der = derivative_rhs(ctx, next);
    for (std::size_t k = 0; k < next.size(); ++k)
      next[k] = hermitize(next[k] + 0.5 * dt * der[k]);
  }
  guard_positivity(next, dt, tol);

  CQState out;
  out.grid = state.grid;
  out.hilbert_dim = state.hilbert_dim;
  out.blocks = std::move(next);
  return out;
}

RealVector drift_expectation(const CQState& state, const GeneratorSpec& gen) {
  require(gen.basis.dim == state.hilbert_dim, ErrorCode::DimensionMismatch,
          "generator basis dimension != state dimension");
  StepContext ctx = make_context(state, gen);
  const int n = state.grid.dim();
  const double vol = state.grid.cell_volume();
  RealVector v = RealVector::Zero(n);
  for (std::size_t k = 0; k < state.blocks.size(); ++k) {
    const MomentSet& mo = ctx.at(k);
    for (int i = 0; i < n; ++i)
      v(i) += vol * sandwich(ctx, mo.D1[i], state.blocks[k]).trace().real();
  }
  return v;
}

double variance_rate(const CQState& state, const GeneratorSpec& gen, int i1, int i2) {
  require(i1 >= 0 && i1 < state.grid.dim() && i2 >= 0 && i2 < state.grid.dim(),
          ErrorCode::DimensionMismatch, "axis index out of range");
  StepContext ctx = make_context(state, gen);
  const double vol = state.grid.cell_volume();
  double d2_mean = 0.0;
  double z1_mean = 0.0, z2_mean = 0.0;
  double a1_mean = 0.0, a2_mean = 0.0;
  double z2a1 = 0.0, z1a2 = 0.0;
  for (std::size_t k = 0; k < state.blocks.size(); ++k) {
    const MomentSet& mo = ctx.at(k);
    const Matrix& rho = state.blocks[k];
    double z1 = state.grid.coord(k, i1);
    double z2 = state.grid.coord(k, i2);
    double tr = rho.real().trace();
    double a1 = sandwich(ctx, mo.D1[i1], rho).trace().real();
    double a2 = sandwich(ctx, mo.D1[i2], rho).trace().real();
    d2_mean += vol * sandwich(ctx, mo.d2(i1, i2), rho).trace().real();
    z1_mean += vol * z1 * tr;
    z2_mean += vol * z2 * tr;
    a1_mean += vol * a1;
    a2_mean += vol * a2;
    z2a1 += vol * z2 * a1;
    z1a2 += vol * z1 * a2;
  }
  return 2.0 * d2_mean + (z2a1 - z2_mean * a1_mean) + (z1a2 - z1_mean * a2_mean);
}

double oscillator_decoherence_rate(int n, int m, double d_up, double d_down) {
  require(n >= 0 && m >= 0, ErrorCode::InvalidCoupling, "occupation numbers must be >= 0");
  require(d_up >= 0.0 && d_down >= 0.0, ErrorCode::InvalidCoupling, "couplings must be >= 0");
  return 0.5 * (d_up + d_down) * (n + m);
}

double oscillator_thermal_temperature(double omega, double d_up, double d_down) {
  require(d_up > 0.0 && d_down > d_up, ErrorCode::InvalidCoupling,
          "thermalization needs D_down > D_up > 0");
  return omega / std::log(d_down / d_up);
}

}  // namespace cqgrav
