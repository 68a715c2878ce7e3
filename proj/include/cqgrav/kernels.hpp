#ifndef CQGRAV_KERNELS_HPP
#define CQGRAV_KERNELS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cqgrav/constants.hpp"
#include "cqgrav/grid.hpp"
#include "cqgrav/linalg.hpp"

namespace cqgrav {

enum class KernelFamily {
  Dirac,
  Gaussian,
  DiosiPenrose,
  LaplaceBeltramiWeakField,
  LaplacianOfDelta,
  DiscreteJumpLocal,
};

const char* family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& name);

struct KernelSpec {
  KernelFamily family = KernelFamily::Dirac;
  double coupling = 1.0;
  double r0 = 0.0;                    // Gaussian width (per-axis std dev)
  std::string units;
  RealVector background_potential;    // LaplaceBeltramiWeakField
  RealVector mass_field;              // DiscreteJumpLocal, kg/m^3 per site
};

/// Spatial two-point kernel sampled on a grid. Translation-structured
/// families keep a functional form so large grids never materialize the
/// s x s matrix; apply() is the quadrature operator (K f)(x) = sum_y vol K(x,y) f(y).
class DiscretizedKernel {
 public:
  enum class Form {
    Dense,
    Diagonal,            // diag(weights)/vol, i.e. w(x) delta(x,y)
    GaussianProduct,     // amp * prod_axis g_1d(dx_i)
    GaussianInverse,     // amp * prod_axis [sum_n c_n H_2n] g_1d
    InverseDistance,     // amp / |x-y|, diagonal amp * 3/(2 r_cell)
    NegLaplacianDelta,   // amp * (-lap) delta(x,y)
    WeightedNegLaplacianDelta,  // amp * (w(x)+w(y))/2 * (-lap) delta
  };

  DiscretizedKernel() = default;

  SpatialGrid grid;
  std::string units;
  Form form = Form::Dense;
  double amp = 0.0;
  double r0 = 0.0;
  int order = 0;            // GaussianInverse truncation per axis
  RealVector weights;       // Diagonal / WeightedNegLaplacianDelta
  RealMatrix dense;

  double entry(std::size_t a, std::size_t b) const;
  RealVector apply(const RealVector& f, int threads = 1) const;
  /// Dense matrix of kernel values; throws for grids above max_sites.
  RealMatrix materialize(std::size_t max_sites = 8192) const;
  double symmetry_defect(int probes = 16, std::uint64_t seed = 7) const;

  static DiscretizedKernel dense_from(const SpatialGrid& g, RealMatrix values, std::string units);
};

/// Sample a kernel family on a grid. Gaussian requires >= 3 cells per r0.
DiscretizedKernel discretize(const KernelSpec& spec, const SpatialGrid& grid,
                             const Constants& constants = {});

/// Series coefficient of grad^{2n} delta in the inverse of the normalized
/// variance-r0^2 Gaussian: (-1)^n r0^{2n} / (2^n n!).
double gaussian_inverse_series_coefficient(int n, double r0);

/// Truncated Gaussian kernel inverse F(x,y) g_N(x,y) with per-axis Hermite
/// series of order_N; convolution with g_N approaches delta as order_N grows.
DiscretizedKernel invert_gaussian(double r0, int order_N, const SpatialGrid& grid);

/// Generalized inverse of the Diosi-Penrose kernel: -(1/4pi) lap delta(x,y),
/// from the Poisson identity -lap(1/(4 pi |x-y|)) = delta.
DiscretizedKernel invert_dp(const SpatialGrid& grid);

struct SaturatingPairOptions {
  double drift = -0.5;        // Newtonian local back-reaction D1
  int gauss_order = 8;
  double m0 = 1.0;            // Gaussian reference mass
  Constants constants;
};

/// (D0, D2) kernels saturating the coupling-constant trade-off for the
/// Newtonian local drift. Gaussian: D2 = (1/8)(m0^2/(r0^3 lambda)) F g_N;
/// DiosiPenrose: D2 = (1/8)(1/D0) (-1/4pi) lap delta; LaplaceBeltramiWeakField
/// (0th order in Phi): D0 = the Diosi-Penrose kernel with coupling 1/(4 pi D).
std::pair<DiscretizedKernel, DiscretizedKernel> saturating_pair(
    const KernelSpec& d0_spec, const SpatialGrid& grid, const SaturatingPairOptions& opt = {});

/// 7-point (2 per axis) reflecting-boundary Laplacian applied to a field.
RealVector apply_laplacian(const SpatialGrid& grid, const RealVector& f);

/// Randomized estimate of the smallest eigenvalue of the kernel value matrix
/// (shifted power iteration); usable where dense eigensolves are too large.
double min_eigenvalue_estimate(const DiscretizedKernel& k, int iters = 120,
                               std::uint64_t seed = 99, int threads = 1);

}  // namespace cqgrav

#endif
