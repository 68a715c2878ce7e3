#ifndef CQGRAV_OBSERVABLES_HPP
#define CQGRAV_OBSERVABLES_HPP

#include <array>
#include <optional>
#include <string>

#include "cqgrav/constants.hpp"
#include "cqgrav/kernels.hpp"

namespace cqgrav {

/// lambda = int int D0(x,y) (mL - mR)(x) (mL - mR)(y) by grid quadrature.
/// For well-separated branches this is the sum of the two branch self-terms;
/// a single branch against vacuum gives the self-energy rate (6 D0 M^2 / 5R
/// for a uniform sphere under the Diosi-Penrose kernel).
double decoherence_rate(const DiscretizedKernel& D0_kernel, const RealVector& m_left,
                        const RealVector& m_right, int threads = 1);

/// Uniform-density sphere rasterized with sub-cell volume fractions.
RealVector sphere_mass_field(const SpatialGrid& grid, const std::array<double, 3>& center,
                             double radius, double total_mass, int subsamples = 4);

/// Variance of the time-averaged total force on a grid mass distribution:
/// sigma_F^2 = (2 G^2 / T) int g(x') . g(y') <D2(x',y')>, with
/// g(x') = int m(x) (x-x')/|x-x'|^3 dx.
double force_variance_grid(const RealVector& mass, const SpatialGrid& grid,
                           const DiscretizedKernel& D2_kernel, double T,
                           const Constants& constants = {}, int threads = 1);

/// The kernel field g above (3 components per site, stacked site-major).
RealMatrix force_kernel_field(const RealVector& mass, const SpatialGrid& grid,
                              const Constants& constants = {}, int threads = 1);

enum class SqueezeFamily { ContinuousDirac, DiscreteLocal, DiosiPenrose };

const char* squeeze_family_name(SqueezeFamily f);
SqueezeFamily squeeze_family_from_name(const std::string& name);

/// Table-top inputs for the two-sided bound on the diffusion coupling.
struct SqueezeScenario {
  double sigma_a = 0.0;   // acceleration std, m/s^2
  double T = 0.0;         // averaging time, s
  double N = 0.0;         // atom count
  double r_N = 0.0;       // nuclear radius, m
  double m_N = 0.0;       // atom mass, kg (DiscreteLocal)
  double V_b = 0.0;       // background-potential volume, m^3 (ContinuousDirac)
  double M_lambda = 0.0;  // superposed mass, kg
  double V_lambda = 0.0;  // wave-packet volume, m^3
  double R_lambda = 0.0;  // wave-packet length, m
  double lambda = 0.0;    // decoherence rate, 1/s
  SqueezeFamily family = SqueezeFamily::ContinuousDirac;

  void validate() const;
};

struct BoundReport {
  double upper = 0.0;
  double lower = 0.0;
  std::string units;
  std::string quantity;   // which coupling combination is bounded
  bool squeezed_out = false;  // lower > upper
  SqueezeScenario inputs;     // provenance echo
};

/// Upper bound from torsion-balance acceleration noise, lower bound from
/// interferometric coherence. ContinuousDirac bounds D2 (kg^2 s m^-3),
/// DiscreteLocal bounds l_P^3 D2/m_P (kg s), DiosiPenrose bounds l_P^2 D2
/// (kg^2 s m^-1).
BoundReport squeeze(const SqueezeScenario& scenario, const Constants& constants = {});

/// sigma_a^2 predicted by the family's force-variance formula at coupling
/// value `bounded_coupling` (same combination squeeze() bounds).
double squeeze_predicted_sigma_a2(const SqueezeScenario& s, double bounded_coupling,
                                  const Constants& constants = {});

struct EnergyReport {
  double dEdt = 0.0;           // W, integrated over the wave-packet volume
  double rate_density = 0.0;   // W/m^3 at the reference mass density
  double accumulated = 0.0;    // J/m^3 over the given age
};

/// Kinetic-energy production floor dE/dt >= int c^2 G pi <m>^2 / (12 lambda).
/// rho_mean: wave-packet mean mass density (kg/m^3) over volume (m^3);
/// rho_reference: density for the rate-density/accumulated chain (defaults to
/// rho_mean); age in seconds. Throws MissingDecoherenceRate for lambda <= 0.
EnergyReport energy_production(double rho_mean, double volume, double lambda,
                               double age, std::optional<double> rho_reference = std::nullopt,
                               const Constants& constants = {});

}  // namespace cqgrav

#endif
