#ifndef CQGRAV_TRADEOFF_HPP
#define CQGRAV_TRADEOFF_HPP

#include <optional>

#include "cqgrav/generator.hpp"
#include "cqgrav/kernels.hpp"
#include "cqgrav/state.hpp"

namespace cqgrav {

/// Outcome of a decoherence-diffusion positivity check.
///
/// satisfied  <=> min eigenvalue of [[2 D2, D1], [D1^dag, D0]] >= -tol*scale
///            <=> schur_defect and support_defect within tolerance.
struct TradeoffVerdict {
  bool satisfied = false;
  double min_eigenvalue = 0.0;  // of the block matrix
  double schur_defect = 0.0;    // most negative eigenvalue of 2 D2 - D1 D0^- D1^dag, clipped at 0 when satisfied
  double support_defect = 0.0;  // ||D1 (I - D0 D0^-)||_2
  double scale = 1.0;           // max |entry| of the block matrix
};

/// Eigendecomposition-based generalized (Moore-Penrose) inverse of a
/// Hermitian PSD matrix. Throws NotHermitian.
Matrix generalized_inverse(const Matrix& m, double rank_tol = 1e-12,
                           const Tolerances& tol = {});

/// Coupling-constant trade-off 2 D2 >= D1 D0^- D1^dag as PSD of the block
/// matrix. D0: p x p, D1_br: (p+1)n x p, D2: (p+1)n x (p+1)n.
TradeoffVerdict check_coupling_tradeoff(const Matrix& D0, const Matrix& D1_br,
                                        const Matrix& D2, const Tolerances& tol = {});

/// The diffusion matrix (1/2) D1 D0^- D1^dag that saturates the trade-off.
/// Throws SupportViolation when D1 has a component outside range(D0).
Matrix saturating_D2(const Matrix& D0, const Matrix& D1_br, const Tolerances& tol = {});

struct ObservationalTradeoff {
  TradeoffVerdict back_reaction;                  // 2<D2><D0> >= <D1br><D1br>^dag
  std::optional<TradeoffVerdict> total_drift;     // 8<D2><D0> >= <D1T><D1T>^dag (asserted only for declared sources)
  TradeoffVerdict total_drift_reported;           // same check, always computed for diagnostics
  std::optional<TradeoffVerdict> hamiltonian_form;  // 8<D2><D0> >= <w dH_I/dz><...>^dag
  double d0_expectation = 0.0;
  RealMatrix d2_expectation;      // n x n
  Vector d1_br_expectation;       // n
  Vector d1_total_expectation;    // n
};

/// State-averaged trade-off per the moment expectations
/// <D0> = sum vol Tr(D0^{ab} L_a rho L_b^dag), etc. If an interaction
/// Hamiltonian H_I(z) is supplied, also evaluates the Hamiltonian form with
/// drift <omega . dH_I/dz> (n must be even, axes ordered (q_i, p_i)).
ObservationalTradeoff observational_tradeoff(const CQState& state, const GeneratorSpec& gen,
                                             const HybridOperator* H_I = nullptr,
                                             const Tolerances& tol = {});

/// Field-kernel trade-off: assembles the 2s x 2s block grid matrix
/// [[2 D2(x,y), delta(x,y) D1(x)], [delta(x,y) D1(x), D0(x,y)]] with
/// delta -> 1/cell_volume on the diagonal, and checks PSD. Also probes the
/// smeared inequality with randomized test vectors; the worst margin is
/// folded into the verdict's schur_defect when negative.
TradeoffVerdict check_kernel_tradeoff(const DiscretizedKernel& D0_kernel,
                                      const RealVector& D1_local,
                                      const DiscretizedKernel& D2_kernel,
                                      const Tolerances& tol = {},
                                      int smeared_probes = 32, std::uint64_t probe_seed = 1234);

enum class AveragedBoundMode { TotalMass, NewtonianPotential };

/// Spatially averaged lower bound on integrated diffusion for the Newtonian
/// back-reaction: TotalMass -> M^2/(16 lambda) as required int int <D2>;
/// NewtonianPotential -> |<Phi(query)>|^2 / (16 G^2 lambda) as the required
/// 1/(|q-x||q-y|)-weighted integral.
double spatially_averaged_bound(const RealVector& mean_mass, const SpatialGrid& grid,
                                double lambda, AveragedBoundMode mode,
                                const std::array<double, 3>& query_point,
                                const Constants& constants = {});

}  // namespace cqgrav

#endif
