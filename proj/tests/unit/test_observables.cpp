#include <doctest.h>

#include <numbers>

#include "cqgrav/observables.hpp"
#include "cqgrav/rng.hpp"

using namespace cqgrav;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("decoherence_rate: identical branches, symmetry, Dirac closed form") {
  SpatialGrid grid = SpatialGrid::cube(1.0, 6);
  KernelSpec dirac;
  dirac.family = KernelFamily::Dirac;
  dirac.coupling = 0.7;
  DiscretizedKernel k = discretize(dirac, grid);

  RealVector mA = sphere_mass_field(grid, {0.35, 0.5, 0.5}, 0.15, 2.0);
  RealVector mB = sphere_mass_field(grid, {0.65, 0.5, 0.5}, 0.15, 2.0);
  CHECK(decoherence_rate(k, mA, mA) == 0.0);
  CHECK(decoherence_rate(k, mA, mB) == doctest::Approx(decoherence_rate(k, mB, mA)));

  RealVector dm = mA - mB;
  double oracle = 0.7 * grid.cell_volume() * dm.squaredNorm();
  CHECK(decoherence_rate(k, mA, mB) == doctest::Approx(oracle).epsilon(1e-12));

  CHECK_THROWS_AS(decoherence_rate(k, mA, RealVector::Zero(10)), Error);
}

TEST_CASE("decoherence_rate: DP sphere self-term approaches 6 D0 M^2 / 5R") {
  // mid-resolution check; the acceptance suite runs the 1% version at 48^3
  SpatialGrid grid = SpatialGrid::cube(1.0, 24);
  const double R = 0.3, M = 3.0e-2, D0c = 2.0;
  KernelSpec dp;
  dp.family = KernelFamily::DiosiPenrose;
  dp.coupling = D0c;
  DiscretizedKernel k = discretize(dp, grid);
  RealVector m = sphere_mass_field(grid, {0.5, 0.5, 0.5}, R, M);
  RealVector zero = RealVector::Zero(grid.size());
  double lam = decoherence_rate(k, m, zero, 4);
  double exact = 6.0 * D0c * M * M / (5.0 * R);
  CHECK(lam == doctest::Approx(exact).epsilon(0.02));

  // two well-separated spheres: total is twice the per-branch self-term
  SpatialGrid wide({2.0, 1.0, 1.0}, {32, 16, 16});
  DiscretizedKernel kw = discretize(dp, wide);
  RealVector mL = sphere_mass_field(wide, {0.4, 0.5, 0.5}, 0.12, M);
  RealVector mR = sphere_mass_field(wide, {1.6, 0.5, 0.5}, 0.12, M);
  double both = decoherence_rate(kw, mL, mR, 4);
  double self = 6.0 * D0c * M * M / (5.0 * 0.12);
  double cross = 2.0 * D0c * M * M / 1.2;  // separation term, subtracted by dm dm
  CHECK(both == doctest::Approx(2.0 * self - cross).epsilon(0.05));
}

TEST_CASE("<D0> stays below twice the decoherence rate on decohered mixtures") {
  SpatialGrid grid({2.0, 1.0, 1.0}, {16, 8, 8});
  KernelSpec dp;
  dp.family = KernelFamily::DiosiPenrose;
  dp.coupling = 1.3;
  DiscretizedKernel k = discretize(dp, grid);
  RealVector mL = sphere_mass_field(grid, {0.4, 0.5, 0.5}, 0.15, 1.0);
  RealVector mR = sphere_mass_field(grid, {1.6, 0.5, 0.5}, 0.15, 1.0);
  double lambda = decoherence_rate(k, mL, mR, 4);
  const double vol = grid.cell_volume();
  // effective Lindblad couplings are 2 vol^2 D0(a,b) with L_a = m(x_a)
  double sLL = vol * mL.dot(k.apply(mL, 4));
  double sRR = vol * mR.dot(k.apply(mR, 4));
  for (double pL : {0.0, 0.3, 0.5, 1.0}) {
    double d0_mean = 2.0 * (pL * sLL + (1.0 - pL) * sRR);
    CHECK(d0_mean <= 2.0 * lambda * (1.0 + 1e-12));
  }
}

TEST_CASE("force_variance_grid: zero kernel, 1/T scaling, linearity in D2") {
  SpatialGrid grid = SpatialGrid::cube(1.0, 8);
  Constants pc;
  RealVector m = sphere_mass_field(grid, {0.5, 0.5, 0.5}, 0.2, 10.0);
  RealMatrix zero = RealMatrix::Zero(grid.size(), grid.size());
  CHECK(force_variance_grid(m, grid, DiscretizedKernel::dense_from(grid, zero, ""), 1.0, pc) ==
        0.0);

  KernelSpec dirac;
  dirac.family = KernelFamily::Dirac;
  dirac.coupling = 1.0;
  DiscretizedKernel k1 = discretize(dirac, grid);
  double v1 = force_variance_grid(m, grid, k1, 1.0, pc, 2);
  double v2 = force_variance_grid(m, grid, k1, 2.0, pc, 2);
  CHECK(v1 == doctest::Approx(2.0 * v2).epsilon(1e-12));
  dirac.coupling = 3.0;
  DiscretizedKernel k3 = discretize(dirac, grid);
  CHECK(force_variance_grid(m, grid, k3, 1.0, pc, 2) == doctest::Approx(3.0 * v1).epsilon(1e-12));
}

TEST_CASE("force_variance_grid: Dirac kernel near the sphere-atom scaling formula") {
  // single nuclear sphere; the grid box is the background-volume cutoff V_b
  Constants pc;
  const double rN = 1.0e-15;
  const double box = 3.0 * rN;
  SpatialGrid grid = SpatialGrid::cube(box, 18);
  const double mN = 1.7e-27;
  RealVector m = sphere_mass_field(grid, {box / 2, box / 2, box / 2}, rN, mN);
  const double D2c = 1.0e-40, T = 100.0;
  KernelSpec dirac;
  dirac.family = KernelFamily::Dirac;
  dirac.coupling = D2c;
  DiscretizedKernel k = discretize(dirac, grid);
  double sigmaF2 = force_variance_grid(m, grid, k, T, pc, 4);
  double sigma_a2 = sigmaF2 / (mN * mN);
  double formula = D2c * pc.G * pc.G * (box * box * box) / (rN * rN * rN * rN * 1.0 * T);
  CHECK(sigma_a2 / formula > 1.0 / 3.0);
  CHECK(sigma_a2 / formula < 3.0);
}

TEST_CASE("force_variance_grid agrees with Monte-Carlo sampling of the noise (small)") {
  SpatialGrid grid = SpatialGrid::cube(1.0, 6);
  Constants pc = [] {
    Constants c;
    c.G = 1.0;
    return c;
  }();
  RealVector m = sphere_mass_field(grid, {0.4, 0.5, 0.5}, 0.18, 2.0);
  KernelSpec gauss;
  gauss.family = KernelFamily::Gaussian;
  gauss.coupling = 0.5;
  gauss.r0 = 0.2;
  DiscretizedKernel D2 = discretize(gauss, grid);
  const double T = 0.5;
  double quadrature = force_variance_grid(m, grid, D2, T, pc, 4);

  // direct sampling: time-averaged fluctuating force over n_t white-noise steps
  RealMatrix S = psd_sqrt(RealMatrix(2.0 * D2.materialize()));
  RealMatrix g = force_kernel_field(m, grid, pc, 4);
  const int n_t = 8, n_samples = 10000;
  const double dt = T / n_t;
  const double vol = grid.cell_volume();
  Rng rng(23);
  double acc = 0.0;
  RealVector nvec(grid.size());
  for (int s = 0; s < n_samples; ++s) {
    double fx = 0, fy = 0, fz = 0;
    for (int k = 0; k < n_t; ++k) {
      for (std::size_t a = 0; a < grid.size(); ++a) nvec(a) = rng.normal();
      RealVector J = S * nvec / std::sqrt(dt);
      fx += pc.G * vol * g.col(0).dot(J) * dt;
      fy += pc.G * vol * g.col(1).dot(J) * dt;
      fz += pc.G * vol * g.col(2).dot(J) * dt;
    }
    acc += (fx * fx + fy * fy + fz * fz) / (T * T);
  }
  double mc = acc / n_samples;
  CHECK(mc == doctest::Approx(quadrature).epsilon(0.10));
}

TEST_CASE("squeeze: paper-scale inputs for the three families") {
  Constants pc;
  SqueezeScenario s;
  s.sigma_a = 1e-7;
  s.T = 1e2;
  s.N = 1e26;
  s.r_N = 1e-15;
  s.V_b = 1e15;
  s.M_lambda = 1e-24;
  s.V_lambda = 1e-25;
  s.R_lambda = 1e-9;
  s.lambda = 1e1;
  s.m_N = 1.7e-27;

  s.family = SqueezeFamily::ContinuousDirac;
  BoundReport cd = squeeze(s, pc);
  CHECK(cd.lower == doctest::Approx(1e-24));
  CHECK(cd.upper == doctest::Approx(2.2457e-41).epsilon(1e-3));
  CHECK(cd.squeezed_out);
  CHECK(cd.units == "kg^2 s m^-3");

  s.family = SqueezeFamily::DiscreteLocal;
  BoundReport dl = squeeze(s, pc);
  CHECK(dl.lower == doctest::Approx(1e-25));
  CHECK(dl.upper == doctest::Approx(1.321e1).epsilon(1e-3));
  CHECK_FALSE(dl.squeezed_out);
  CHECK(dl.units == "kg s");

  s.family = SqueezeFamily::DiosiPenrose;
  BoundReport dp = squeeze(s, pc);
  CHECK(dp.lower == doctest::Approx(1e-40));
  CHECK(dp.upper == doctest::Approx(2.2457e-11).epsilon(1e-3));
  CHECK_FALSE(dp.squeezed_out);
  CHECK(dp.units == "kg^2 s m^-1");
}

TEST_CASE("squeeze: monotonicity and divergent-integral guard") {
  SqueezeScenario s;
  s.sigma_a = 1e-7;
  s.T = 1e2;
  s.N = 1e26;
  s.r_N = 1e-15;
  s.V_b = 1e15;
  s.M_lambda = 1e-24;
  s.V_lambda = 1e-25;
  s.lambda = 1e1;
  s.family = SqueezeFamily::ContinuousDirac;
  BoundReport base = squeeze(s);

  SqueezeScenario up = s;
  up.sigma_a *= 2.0;
  CHECK(squeeze(up).upper > base.upper);
  up = s;
  up.T *= 3.0;
  CHECK(squeeze(up).upper > base.upper);
  up = s;
  up.V_b *= 10.0;
  CHECK(squeeze(up).upper < base.upper);

  SqueezeScenario bad = s;
  bad.V_b = 0.0;
  try {
    squeeze(bad);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivergentIntegral);
  }
  CHECK_THROWS_AS(squeeze_predicted_sigma_a2(bad, 1e-24), Error);
}

TEST_CASE("squeeze: saturation consistency of the bound formulas") {
  SqueezeScenario s;
  s.sigma_a = 1e-7;
  s.T = 1e2;
  s.N = 1e26;
  s.r_N = 1e-15;
  s.V_b = 1e15;
  s.M_lambda = 1e-24;
  s.V_lambda = 1e-25;
  s.R_lambda = 1e-9;
  s.lambda = 1e1;
  s.m_N = 1.7e-27;
  for (SqueezeFamily f : {SqueezeFamily::ContinuousDirac, SqueezeFamily::DiscreteLocal,
                          SqueezeFamily::DiosiPenrose}) {
    s.family = f;
    BoundReport rep = squeeze(s);
    // plugging the upper bound back reproduces the measured sigma_a exactly
    CHECK(squeeze_predicted_sigma_a2(s, rep.upper) ==
          doctest::Approx(s.sigma_a * s.sigma_a).epsilon(1e-12));
    // lower-bound diffusion stays below the measured noise iff not squeezed out
    bool below = squeeze_predicted_sigma_a2(s, rep.lower) <= s.sigma_a * s.sigma_a;
    CHECK(below == !rep.squeezed_out);
  }
}

TEST_CASE("energy production: fullerene chain and guards") {
  Constants pc;
  EnergyReport rep = energy_production(10.0, 1e-25, 10.0, 4e17, std::nullopt, pc);
  double pref = pc.c * pc.c * pc.G * kPi / 120.0;
  CHECK(rep.dEdt == doctest::Approx(pref * 100.0 * 1e-25));
  CHECK(rep.dEdt == doctest::Approx(1.571e-18).epsilon(1e-3));

  // nucleon delocalized at molecule scale: ~1e5 W/m^3 and ~1e22 J/m^3
  double rho_n = 1.67e-27 / std::pow(1.2e-9, 3);
  EnergyReport nuc = energy_production(10.0, 1e-25, 10.0, 4e17, rho_n, pc);
  CHECK(nuc.rate_density == doctest::Approx(1.47e5).epsilon(0.01));
  CHECK(nuc.accumulated == doctest::Approx(5.87e22).epsilon(0.01));

  CHECK(energy_production(0.0, 1e-25, 10.0, 4e17).dEdt == 0.0);
  try {
    energy_production(1.0, 1.0, 0.0, 1.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingDecoherenceRate);
  }
}
