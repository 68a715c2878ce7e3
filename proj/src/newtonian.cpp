#include "cqgrav/newtonian.hpp"

#include <cmath>
#include <numbers>

#include "cqgrav/parallel.hpp"
#include "cqgrav/tradeoff.hpp"

namespace cqgrav {

namespace {
constexpr double kPi = std::numbers::pi;
}

RealVector FieldState::mean_mass() const {
  RealVector m(mass_ops.size());
  for (std::size_t a = 0; a < mass_ops.size(); ++a)
    m(a) = (mass_ops[a] * rho).trace().real();
  return m;
}

PoissonResult poisson_solve(const RealVector& mass, const SpatialGrid& grid,
                            const Constants& constants, int threads) {
  require(static_cast<std::size_t>(mass.size()) == grid.size(), ErrorCode::GridMismatch,
          "mass field size does not match grid");
  DiscretizedKernel k;
  k.grid = grid;
  k.form = DiscretizedKernel::Form::InverseDistance;
  k.amp = 1.0;
  PoissonResult res;
  res.phi = -constants.G * k.apply(mass, threads);
  RealVector lap = apply_laplacian(grid, res.phi);
  double acc = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    if (!grid.interior(a)) continue;
    double r = lap(a) - 4.0 * kPi * constants.G * mass(a);
    acc += r * r;
  }
  res.residual_norm = std::sqrt(acc);
  return res;
}

RealVector sourced_potential(const RealVector& mass, const RealVector& J,
                             const SpatialGrid& grid, const Constants& constants, int threads) {
  require(mass.size() == J.size(), ErrorCode::GridMismatch, "mass and noise field sizes differ");
  RealVector src = mass - J;
  DiscretizedKernel k;
  k.grid = grid;
  k.form = DiscretizedKernel::Form::InverseDistance;
  k.amp = 1.0;
  return -constants.G * k.apply(src, threads);
}

std::pair<RealVector, RealVector> constraint_residuals(const FieldState& state,
                                                       const Constants& constants) {
  const SpatialGrid& g = state.grid;
  RealVector mexp = state.mean_mass();
  RealVector lap = apply_laplacian(g, state.phi);
  RealVector ham(g.size());
  for (std::size_t a = 0; a < g.size(); ++a) {
    ham(a) = (2.0 * kPi * constants.G / 3.0) * state.pi(a) * state.pi(a) +
             lap(a) / (4.0 * kPi * constants.G) - mexp(a);
  }
  RealVector mom = RealVector::Zero(g.size() * g.dim());
  const double mom_scale = -3.0 * constants.c / (4.0 * kPi * constants.G);
  for (int i = 0; i < g.dim(); ++i) {
    double h = g.spacing(i);
    for (std::size_t a = 0; a < g.size(); ++a) {
      std::size_t up = g.neighbor(a, i, +1);
      std::size_t dn = g.neighbor(a, i, -1);
      double d;
      if (up != SpatialGrid::npos && dn != SpatialGrid::npos)
        d = (state.pi(up) - state.pi(dn)) / (2.0 * h);
      else if (up != SpatialGrid::npos)
        d = (state.pi(up) - state.pi(a)) / h;
      else if (dn != SpatialGrid::npos)
        d = (state.pi(a) - state.pi(dn)) / h;
      else
        d = 0.0;
      mom(static_cast<std::size_t>(i) * g.size() + a) = mom_scale * d;
    }
  }
  return {ham, mom};
}

struct UnravelingWorkspace {
  std::size_t sites = 0;
  double vol = 0.0;
  std::vector<Matrix> A_ops;  // A_a = sum_b vol^2 D0_ab m_b
  Matrix G_op;                // sum_a m_a A_a
  RealMatrix sigma;           // sqrt(2 D2 / vol), kernel noise factor
  RealMatrix sigma_pinv;
  bool has_noise = false;
  bool has_decoherence = false;
  bool has_H = false;
  int dim_q = 0;
};

Unraveling::Unraveling(const FieldState& initial, const NoiseConfig& cfg, const Tolerances& tol)
    : cfg_(cfg), tol_(tol), ws_(std::make_unique<UnravelingWorkspace>()) {
  const SpatialGrid& g = initial.grid;
  require(cfg.dt > 0.0, ErrorCode::InvalidPair, "dt must be positive");
  require(cfg.ensemble_size >= 1, ErrorCode::InvalidPair, "ensemble_size must be >= 1");
  require_same_grid(cfg.D2_kernel.grid, g, "D2 kernel grid does not match state");
  require_same_grid(cfg.D0_kernel.grid, g, "D0 kernel grid does not match state");
  require(initial.mass_ops.size() == g.size(), ErrorCode::GridMismatch,
          "need one mass operator per site");
  const std::size_t s = g.size();
  const int d = static_cast<int>(initial.rho.rows());
  ws_->sites = s;
  ws_->vol = g.cell_volume();
  ws_->dim_q = d;

  RealMatrix d0v = cfg.D0_kernel.materialize(4096);
  RealMatrix d2v = cfg.D2_kernel.materialize(4096);
  ws_->has_noise = max_abs(d2v) > 0.0;
  ws_->has_decoherence = max_abs(d0v) > 0.0;
  ws_->has_H = cfg.H_matter.size() > 0 && max_abs(cfg.H_matter) > 0.0;

  // Back-reaction is present wherever a mass operator is nonzero; the pair
  // (D0, D2) must satisfy the kernel trade-off there.
  RealVector drift = RealVector::Zero(s);
  bool any_drift = false;
  for (std::size_t a = 0; a < s; ++a) {
    if (max_abs(initial.mass_ops[a]) > 0.0) {
      drift(a) = -0.5;
      any_drift = true;
    }
  }
  if (any_drift) {
    TradeoffVerdict v = check_kernel_tradeoff(cfg.D0_kernel, drift, cfg.D2_kernel, tol);
    if (!v.satisfied)
      fail(ErrorCode::InvalidPair, "D0/D2 kernels violate the decoherence-diffusion trade-off");
  }

  if (ws_->has_decoherence) {
    const double v2 = ws_->vol * ws_->vol;
    ws_->A_ops.resize(s);
    Matrix G = Matrix::Zero(d, d);
    for (std::size_t a = 0; a < s; ++a) {
      Matrix A = Matrix::Zero(d, d);
      for (std::size_t b = 0; b < s; ++b) {
        double c = v2 * d0v(a, b);
        if (c != 0.0) A += c * initial.mass_ops[b];
      }
      ws_->A_ops[a] = A;
      G += initial.mass_ops[a] * A;
    }
    ws_->G_op = G;
  }
  if (ws_->has_noise) {
    ws_->sigma = psd_sqrt(RealMatrix(2.0 * d2v / ws_->vol));
    ws_->sigma_pinv = pseudo_inverse(ws_->sigma, tol.rank);
  }
}

Unraveling::~Unraveling() = default;

void Unraveling::step(FieldState& state, Rng& rng) const {
  const SpatialGrid& g = state.grid;
  const std::size_t s = ws_->sites;
  const double dt = cfg_.dt;
  const double vol = ws_->vol;
  const Constants& pc = cfg_.constants;
  const Complex I(0.0, 1.0);

  RealVector mexp = state.mean_mass();
  RealVector lap_phi = apply_laplacian(g, state.phi);

  RealVector eta = RealVector::Zero(s);
  RealVector n(s);
  if (ws_->has_noise) {
    for (std::size_t a = 0; a < s; ++a) n(a) = rng.normal();
    eta = std::sqrt(dt * vol) * (ws_->sigma * n);
  }

  RealVector new_phi;
  if (cfg_.quasi_static) {
    // c -> infinity: the potential is re-solved each step, sourced by m - J.
    RealVector J = eta / dt;
    new_phi = sourced_potential(mexp, J, g, pc, cfg_.threads);
  } else {
    new_phi = state.phi - (4.0 * kPi * pc.G * pc.c * pc.c / 3.0) * dt * state.pi;
  }
  RealVector new_pi =
      state.pi + dt * (lap_phi / (4.0 * kPi * pc.G) - mexp) + eta;

  Matrix drho = Matrix::Zero(ws_->dim_q, ws_->dim_q);
  if (ws_->has_H) drho -= I * dt * commutator(cfg_.H_matter, state.rho);
  if (ws_->has_decoherence) {
    Matrix dec = Matrix::Zero(ws_->dim_q, ws_->dim_q);
    for (std::size_t a = 0; a < s; ++a) {
      dec += state.mass_ops[a] * state.rho * ws_->A_ops[a];
      dec += ws_->A_ops[a] * state.rho * state.mass_ops[a];
    }
    dec -= ws_->G_op * state.rho + state.rho * ws_->G_op.adjoint();
    drho += dt * dec;
  }
  if (ws_->has_noise) {
    RealVector u = 0.5 * std::sqrt(dt / vol) * (ws_->sigma_pinv * n);
    Matrix U = Matrix::Zero(ws_->dim_q, ws_->dim_q);
    for (std::size_t a = 0; a < s; ++a)
      U += u(a) * (state.mass_ops[a] - mexp(a) * Matrix::Identity(ws_->dim_q, ws_->dim_q));
    drho += anticommutator(U, state.rho);
  }

  Matrix rho = hermitize(state.rho + drho);
  double tr = rho.real().trace();
  trace_defect_ = std::abs(tr - 1.0);
  require(tr > 0.0, ErrorCode::StepTooLarge, "quantum state trace collapsed");
  rho /= tr;
  double scale = std::max(max_abs(rho), 1e-300);
  if (min_eigenvalue(rho) < -tol_.psd * std::max(1.0, scale) - 1e3 * cfg_.dt * scale) {
    // allow the O(dt) Euler excursion, flag anything beyond it
    fail(ErrorCode::StepTooLarge, "quantum state positivity lost; reduce dt");
  }

  state.phi = std::move(new_phi);
  state.pi = std::move(new_pi);
  state.rho = std::move(rho);
}

FieldState step_unraveling(const FieldState& state, const NoiseConfig& cfg, Rng& rng,
                           const Tolerances& tol) {
  Unraveling u(state, cfg, tol);
  FieldState out = state;
  u.step(out, rng);
  return out;
}

EnsembleSummary run_ensemble(const FieldState& initial, const NoiseConfig& cfg,
                             const EnsembleOptions& opt, const Tolerances& tol) {
  Unraveling engine(initial, cfg, tol);
  const int n_traj = cfg.ensemble_size;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(opt.t_final / cfg.dt - 1e-12));
  const int snaps = std::max(1, opt.snapshots);
  const std::size_t record_every = std::max<std::size_t>(1, steps / static_cast<std::size_t>(snaps));
  std::vector<std::size_t> record_steps;
  for (std::size_t st = 0; st <= steps; st += record_every) record_steps.push_back(st);
  if (record_steps.back() != steps) record_steps.push_back(steps);
  const std::size_t nrec = record_steps.size();
  const int d = static_cast<int>(initial.rho.rows());

  struct TrajRecord {
    std::vector<double> phi, pi, coh, ham, mom;
    std::vector<Matrix> rho;
    std::vector<RealMatrix> rho_abs2;
  };
  std::vector<TrajRecord> records(n_traj);
  std::vector<std::uint64_t> seeds(n_traj);
  for (int t = 0; t < n_traj; ++t) seeds[t] = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));

  parallel_for(static_cast<std::size_t>(n_traj), cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      Rng rng(seeds[t]);
      FieldState st = initial;
      TrajRecord& rec = records[t];
      rec.phi.reserve(nrec);
      std::size_t next_rec = 0;
      for (std::size_t step = 0; step <= steps; ++step) {
        if (next_rec < nrec && step == record_steps[next_rec]) {
          auto res = constraint_residuals(st, cfg.constants);
          rec.phi.push_back(st.phi(opt.probe_site));
          rec.pi.push_back(st.pi(opt.probe_site));
          rec.coh.push_back(std::abs(st.rho(opt.coherence_i, opt.coherence_j)));
          rec.ham.push_back(res.first.norm());
          rec.mom.push_back(res.second.norm());
          rec.rho.push_back(st.rho);
          rec.rho_abs2.push_back(st.rho.cwiseAbs2());
          ++next_rec;
        }
        if (step < steps) engine.step(st, rng);
      }
    }
  });

  EnsembleSummary out;
  out.ensemble_size = n_traj;
  out.probe_site = opt.probe_site;
  out.seeds = seeds;
  out.times.resize(nrec);
  for (std::size_t r = 0; r < nrec; ++r) out.times[r] = record_steps[r] * cfg.dt;
  out.phi_mean = RealVector::Zero(nrec);
  out.phi_var = RealVector::Zero(nrec);
  out.pi_mean = RealVector::Zero(nrec);
  out.pi_var = RealVector::Zero(nrec);
  out.coherence_mean = RealVector::Zero(nrec);
  out.coherence_var = RealVector::Zero(nrec);
  out.ham_residual = RealVector::Zero(nrec);
  out.mom_residual = RealVector::Zero(nrec);
  out.rho_mean.assign(nrec, Matrix::Zero(d, d));
  out.rho_entry_var.assign(nrec, RealMatrix::Zero(d, d));

  // deterministic reduction in trajectory order
  for (int t = 0; t < n_traj; ++t) {
    const TrajRecord& rec = records[t];
    for (std::size_t r = 0; r < nrec; ++r) {
      out.phi_mean(r) += rec.phi[r];
      out.phi_var(r) += rec.phi[r] * rec.phi[r];
      out.pi_mean(r) += rec.pi[r];
      out.pi_var(r) += rec.pi[r] * rec.pi[r];
      out.coherence_mean(r) += rec.coh[r];
      out.coherence_var(r) += rec.coh[r] * rec.coh[r];
      out.ham_residual(r) += rec.ham[r];
      out.mom_residual(r) += rec.mom[r];
      out.rho_mean[r] += rec.rho[r];
      out.rho_entry_var[r] += rec.rho_abs2[r];
    }
  }
  const double inv = 1.0 / n_traj;
  for (std::size_t r = 0; r < nrec; ++r) {
    out.phi_mean(r) *= inv;
    out.pi_mean(r) *= inv;
    out.coherence_mean(r) *= inv;
    out.ham_residual(r) *= inv;
    out.mom_residual(r) *= inv;
    out.phi_var(r) = std::max(0.0, out.phi_var(r) * inv - out.phi_mean(r) * out.phi_mean(r));
    out.pi_var(r) = std::max(0.0, out.pi_var(r) * inv - out.pi_mean(r) * out.pi_mean(r));
    out.coherence_var(r) =
        std::max(0.0, out.coherence_var(r) * inv - out.coherence_mean(r) * out.coherence_mean(r));
    out.rho_mean[r] *= inv;
    out.rho_entry_var[r] =
        (out.rho_entry_var[r] * inv - out.rho_mean[r].cwiseAbs2()).cwiseMax(0.0);
  }
  return out;
}

}  // namespace cqgrav
