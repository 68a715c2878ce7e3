#ifndef CQGRAV_STATE_HPP
#define CQGRAV_STATE_HPP

#include <vector>

#include "cqgrav/grid.hpp"
#include "cqgrav/linalg.hpp"

namespace cqgrav {

/// Numerical tolerances. psd/orth/rank are relative to the matrix scale,
/// herm and norm are absolute on unit-normalized quantities.
struct Tolerances {
  double psd = 1e-10;
  double herm = 1e-12;
  double norm = 1e-9;
  double orth = 1e-10;
  double support = 1e-8;
  double rank = 1e-12;
  // positivity guard for explicit master-equation steps; central-difference
  // transport undershoots at O(h^2) regardless of dt, so this sits above psd
  double step_guard = 1e-6;
};

/// Traceless Lindblad operators L_alpha; the full operator basis is
/// L_mu = {I, L_1, ..., L_p} with mu = 0 the identity.
struct LindbladBasis {
  int dim = 0;                // Hilbert dimension d
  std::vector<Matrix> ops;    // p traceless d x d operators

  int count() const { return static_cast<int>(ops.size()); }
  /// L_mu with mu in [0, p]; mu = 0 is the identity.
  Matrix op(int mu) const;
  void validate(const Tolerances& tol = {}) const;
};

/// CQ state: one sub-normalized Hermitian block per phase-space cell,
/// normalized as sum_k cell_volume * Tr rho(z_k) = 1.
struct CQState {
  PhaseSpaceGrid grid;
  std::vector<Matrix> blocks;
  int hilbert_dim = 0;
};

struct HybridOperator {
  PhaseSpaceGrid grid;
  std::vector<Matrix> blocks;
};

struct ValidationReport {
  bool passed = false;
  bool positivity_ok = false;
  bool hermiticity_ok = false;
  bool normalization_ok = false;
  std::vector<double> min_eigenvalues;   // per cell
  std::vector<double> herm_defects;      // per cell
  double norm_defect = 0.0;              // |sum vol Tr rho - 1|
  double worst_min_eigenvalue = 0.0;
  double worst_herm_defect = 0.0;
};

ValidationReport validate_state(const CQState& state, const Tolerances& tol = {});

/// p(z_k) = Tr rho(z_k); a density: sum_k vol * p_k = 1.
RealVector classical_marginal(const CQState& state);

/// sum_k vol * rho(z_k); unit-trace density matrix.
Matrix quantum_marginal(const CQState& state);

/// <O> = sum_k vol * Tr(O(z_k) rho(z_k)).
Complex expectation(const CQState& state, const HybridOperator& obs);

/// Transition tensor Lambda^{mu nu}(z_k | z_j): one (p+1) x (p+1) block per
/// ordered cell pair (k, j), stored row-major in k.
struct CPTransition {
  std::size_t cells = 0;
  int p = 0;
  std::vector<Matrix> lambda;  // size cells*cells, entry k*cells + j

  const Matrix& at(std::size_t k, std::size_t j) const { return lambda[k * cells + j]; }
  Matrix& at(std::size_t k, std::size_t j) { return lambda[k * cells + j]; }

  static CPTransition identity_map(const PhaseSpaceGrid& grid, int p);
};

/// rho'(z_k) = sum_j vol * Lambda^{mu nu}(k|j) L_mu rho(z_j) L_nu^dag.
/// Requires every Lambda block PSD and the discrete normalization
/// sum_k vol * Lambda^{mu nu}(k|j) L_nu^dag L_mu = I for every j.
CQState apply_cp_map(const CQState& state, const CPTransition& transition,
                     const LindbladBasis& basis, const Tolerances& tol = {});

}  // namespace cqgrav

#endif
