#ifndef CQGRAV_NEWTONIAN_HPP
#define CQGRAV_NEWTONIAN_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cqgrav/constants.hpp"
#include "cqgrav/kernels.hpp"
#include "cqgrav/rng.hpp"
#include "cqgrav/state.hpp"

namespace cqgrav {

/// Newtonian potential, conjugate momentum and matter state on a spatial grid.
struct FieldState {
  SpatialGrid grid;
  RealVector phi;               // m^2/s^2
  RealVector pi;                // kg s / m^3
  Matrix rho;                   // matter density matrix, unit trace
  std::vector<Matrix> mass_ops; // per-site mass-density operators, kg/m^3

  RealVector mean_mass() const;  // <m(x)> = Tr(m_op(x) rho)
};

struct NoiseConfig {
  std::uint64_t seed = 1;
  double dt = 1e-3;
  DiscretizedKernel D2_kernel;
  DiscretizedKernel D0_kernel;
  int ensemble_size = 1;
  Matrix H_matter;              // optional matter Hamiltonian (empty = none)
  bool quasi_static = false;    // c -> infinity: fresh Poisson solve per step
  int threads = 1;
  Constants constants;
};

struct PoissonResult {
  RealVector phi;
  double residual_norm = 0.0;  // ||lap phi - 4 pi G m||_2 on interior sites
};

/// Free-space Green's function solve: phi = -G sum vol m(x')/|x-x'| with the
/// cell-equivalent-sphere diagonal.
PoissonResult poisson_solve(const RealVector& mass, const SpatialGrid& grid,
                            const Constants& constants = {}, int threads = 1);

/// Potential sourced by m - J (random mass picture).
RealVector sourced_potential(const RealVector& mass, const RealVector& J,
                             const SpatialGrid& grid, const Constants& constants = {},
                             int threads = 1);

/// Hamiltonian and momentum constraint residual fields:
///   (2 pi G / 3) pi^2 + lap(phi)/(4 pi G) - <m>   (zero on the static solution)
///   -(3 c / 4 pi G) grad_i pi                      (per axis, stacked)
std::pair<RealVector, RealVector> constraint_residuals(const FieldState& state,
                                                       const Constants& constants = {});

/// Internals prepared once per run: noise factor and its inverse, D0 couplings.
struct UnravelingWorkspace;

/// Euler-Maruyama step of the coupled (phi, pi, rho) unraveling. Checks the
/// trade-off pair on construction of the workspace (InvalidPair).
class Unraveling {
 public:
  Unraveling(const FieldState& initial, const NoiseConfig& cfg, const Tolerances& tol = {});
  ~Unraveling();

  /// One in-place step; rng drives the Wiener increments.
  void step(FieldState& state, Rng& rng) const;
  double last_trace_defect() const { return trace_defect_; }
  const NoiseConfig& config() const { return cfg_; }

 private:
  NoiseConfig cfg_;
  Tolerances tol_;
  std::unique_ptr<UnravelingWorkspace> ws_;
  mutable double trace_defect_ = 0.0;
};

/// Convenience wrapper: one step on a copy.
FieldState step_unraveling(const FieldState& state, const NoiseConfig& cfg,
                           Rng& rng, const Tolerances& tol = {});

struct EnsembleSummary {
  std::vector<double> times;
  // per time: ensemble mean/variance at the probe site
  RealVector phi_mean, phi_var, pi_mean, pi_var;
  RealVector coherence_mean, coherence_var;     // |rho_ij| for the coherence pair
  RealVector ham_residual, mom_residual;        // mean norms
  std::vector<Matrix> rho_mean;                 // ensemble-averaged quantum state
  std::vector<RealMatrix> rho_entry_var;        // per-entry variance E|z|^2 - |Ez|^2
  std::size_t probe_site = 0;
  int ensemble_size = 0;
  std::vector<std::uint64_t> seeds;
};

struct EnsembleOptions {
  double t_final = 1.0;
  int snapshots = 50;
  std::size_t probe_site = 0;
  int coherence_i = 0;
  int coherence_j = 1;
};

/// Independent trajectories with per-trajectory seeds derived from cfg.seed;
/// reductions are accumulated in trajectory order, so results are
/// bit-reproducible for a fixed (seed, dt, grid, ensemble_size).
EnsembleSummary run_ensemble(const FieldState& initial, const NoiseConfig& cfg,
                             const EnsembleOptions& opt, const Tolerances& tol = {});

}  // namespace cqgrav

#endif
