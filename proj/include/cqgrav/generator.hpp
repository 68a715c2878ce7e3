#ifndef CQGRAV_GENERATOR_HPP
#define CQGRAV_GENERATOR_HPP

#include <functional>
#include <optional>
#include <vector>

#include "cqgrav/state.hpp"

namespace cqgrav {

/// Kramers-Moyal moment data for one phase-space point.
///
/// Index convention: mu, nu run over the full operator basis {I, L_1..L_p}
/// (so matrices are (p+1) x (p+1)); i, j run over the n classical axes.
/// D0 stores only the Lindbladian block D0^{alpha beta} (p x p); the
/// Hamiltonian part D0^{mu 0} enters through H.
struct MomentSet {
  int p = 0;  // Lindblad count
  int n = 0;  // classical dimension
  Matrix D0;                 // p x p, Hermitian PSD
  std::vector<Matrix> D1;    // n entries, each (p+1) x (p+1), Hermitian
  std::vector<Matrix> D2;    // n*n entries (i*n + j), each (p+1) x (p+1)
  Matrix H;                  // d x d Hermitian

  static MomentSet zero(int p, int n, int d);

  const Matrix& d1(int i) const { return D1[i]; }
  const Matrix& d2(int i, int j) const { return D2[i * n + j]; }

  /// D2 viewed as the (p+1)n x (p+1)n matrix with row index i*(p+1)+mu.
  Matrix d2_block() const;
  /// Back-reaction drift slice D1^{mu alpha} as a (p+1)n x p matrix
  /// (rows i*(p+1)+mu, columns alpha = 1..p).
  Matrix d1_back_reaction() const;
  /// Total drift couplings per axis: sum over mu nu != 00 acting on a state.

  void validate(const Tolerances& tol = {}) const;
};

/// H(z) = (i/2)(D0^{mu 0} L_mu - D0^{0 mu} L_mu^dag) from the first-column
/// couplings d0_mu0 (length p+1; the mu = 0 entry only shifts the phase).
Matrix hamiltonian_from_couplings(const Vector& d0_mu0, const LindbladBasis& basis);

enum class BackReactionSource {
  Unspecified,     // mixed; the 8<D2><D0> total-drift bound is reported, not asserted
  IdentityCross,   // sourced by D1^{0 mu} only
  LindbladBlock,   // sourced by D1^{alpha beta} only
};

enum class StepMethod { Euler, Strang };

/// A CQ master-equation generator: Lindblad basis plus (possibly
/// cell-dependent) moment data, truncated at second moments.
struct GeneratorSpec {
  LindbladBasis basis;
  MomentSet constant;
  std::function<MomentSet(const std::vector<double>&)> moments_at;  // optional
  int truncation_order = 2;
  BackReactionSource source = BackReactionSource::Unspecified;

  bool cell_dependent() const { return static_cast<bool>(moments_at); }
  MomentSet at(const std::vector<double>& z) const {
    return cell_dependent() ? moments_at(z) : constant;
  }
  static GeneratorSpec from_constant(LindbladBasis basis, MomentSet moments,
                                     int truncation_order = 2);
};

/// One explicit step of the CQ master equation (classical drift/diffusion,
/// Lindbladian evolution, and back-reaction terms up to truncation_order).
/// Derivatives use zero-flux (reflecting) central stencils, so the total
/// trace is conserved to round-off.
CQState step_master(const CQState& state, const GeneratorSpec& gen, double dt,
                    StepMethod method = StepMethod::Euler, const Tolerances& tol = {});

/// d<z_i>/dt = sum_k vol Tr(D1^{mu nu}_i L_mu rho L_nu^dag), all mu nu.
RealVector drift_expectation(const CQState& state, const GeneratorSpec& gen);

/// d sigma^2_{z_i1 z_i2}/dt: 2<D2_{i1 i2}> plus drift-correlation terms.
double variance_rate(const CQState& state, const GeneratorSpec& gen, int i1, int i2);

/// Damped/pumped oscillator coherence decay (D_up + D_down)(n + m)/2.
double oscillator_decoherence_rate(int n, int m, double d_up, double d_down);

/// Thermalization temperature omega / log(D_down / D_up); requires D_down > D_up.
double oscillator_thermal_temperature(double omega, double d_up, double d_down);

}  // namespace cqgrav

#endif
