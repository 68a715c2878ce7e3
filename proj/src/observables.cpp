#include "cqgrav/observables.hpp"

#include <cmath>
#include <numbers>

#include "cqgrav/parallel.hpp"

namespace cqgrav {

namespace {
constexpr double kPi = std::numbers::pi;
}

double decoherence_rate(const DiscretizedKernel& D0_kernel, const RealVector& m_left,
                        const RealVector& m_right, int threads) {
  const SpatialGrid& g = D0_kernel.grid;
  require(static_cast<std::size_t>(m_left.size()) == g.size() && m_left.size() == m_right.size(),
          ErrorCode::GridMismatch, "branch mass fields do not match the kernel grid");
  for (Eigen::Index i = 0; i < m_left.size(); ++i)
    require(m_left(i) >= 0.0 && m_right(i) >= 0.0, ErrorCode::GridMismatch,
            "mass fields must be non-negative");
  RealVector dm = m_left - m_right;
  const double vol = g.cell_volume();

  if (D0_kernel.form == DiscretizedKernel::Form::InverseDistance) {
    // compact the nonzero support; pair loop dominates at fine grids
    std::vector<std::size_t> nz;
    nz.reserve(g.size());
    for (std::size_t a = 0; a < g.size(); ++a)
      if (dm(a) != 0.0) nz.push_back(a);
    std::vector<std::array<double, 3>> pos(nz.size());
    std::vector<double> w(nz.size());
    for (std::size_t i = 0; i < nz.size(); ++i) {
      pos[i] = g.position(nz[i]);
      w[i] = dm(nz[i]);
    }
    const double amp = D0_kernel.amp;
    const double diag = amp * 1.5 / g.cell_radius();
    std::vector<double> partial(nz.size(), 0.0);
    parallel_for(nz.size(), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        double acc = diag * w[i] * w[i];
        const auto& xi = pos[i];
        for (std::size_t j = i + 1; j < nz.size(); ++j) {
          double dx = xi[0] - pos[j][0], dy = xi[1] - pos[j][1], dz = xi[2] - pos[j][2];
          acc += 2.0 * amp * w[i] * w[j] / std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        partial[i] = acc;
      }
    });
    double sum = 0.0;
    for (double v : partial) sum += v;
    return vol * vol * sum;
  }
  return vol * dm.dot(D0_kernel.apply(dm, threads));
}

RealVector sphere_mass_field(const SpatialGrid& grid, const std::array<double, 3>& center,
                             double radius, double total_mass, int subsamples) {
  require(radius > 0.0 && total_mass > 0.0, ErrorCode::InvalidCoupling,
          "sphere needs positive radius and mass");
  const double density = total_mass / (4.0 / 3.0 * kPi * radius * radius * radius);
  double half_diag = 0.0;
  for (int i = 0; i < grid.dim(); ++i) half_diag += 0.25 * grid.spacing(i) * grid.spacing(i);
  half_diag = std::sqrt(half_diag);
  RealVector m = RealVector::Zero(grid.size());
  for (std::size_t a = 0; a < grid.size(); ++a) {
    auto x = grid.position(a);
    double dx = x[0] - center[0], dy = x[1] - center[1], dz = x[2] - center[2];
    double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (r <= radius - half_diag) {
      m(a) = density;
    } else if (r < radius + half_diag) {
      // fraction of the cell inside the sphere by subsampling
      int inside = 0, total = 0;
      int ss = std::max(2, subsamples);
      std::array<int, 3> counts{1, 1, 1};
      for (int i = 0; i < grid.dim(); ++i) counts[i] = ss;
      for (int ix = 0; ix < counts[0]; ++ix) {
        for (int iy = 0; iy < counts[1]; ++iy) {
          for (int iz = 0; iz < counts[2]; ++iz) {
            std::array<double, 3> q = x;
            std::array<int, 3> idx{ix, iy, iz};
            for (int i = 0; i < grid.dim(); ++i)
              q[i] += ((idx[i] + 0.5) / counts[i] - 0.5) * grid.spacing(i);
            double qx = q[0] - center[0], qy = q[1] - center[1], qz = q[2] - center[2];
            if (qx * qx + qy * qy + qz * qz <= radius * radius) ++inside;
            ++total;
          }
        }
      }
      m(a) = density * inside / total;
    }
  }
  double got = m.sum() * grid.cell_volume();
  if (got > 0.0) m *= total_mass / got;
  return m;
}

RealMatrix force_kernel_field(const RealVector& mass, const SpatialGrid& grid,
                              const Constants&, int threads) {
  require(static_cast<std::size_t>(mass.size()) == grid.size(), ErrorCode::GridMismatch,
          "mass field size does not match grid");
  const std::size_t s = grid.size();
  const double vol = grid.cell_volume();
  std::vector<std::size_t> nz;
  for (std::size_t a = 0; a < s; ++a)
    if (mass(a) != 0.0) nz.push_back(a);
  RealMatrix gfield = RealMatrix::Zero(s, 3);
  std::vector<std::array<double, 3>> pos(s);
  for (std::size_t a = 0; a < s; ++a) pos[a] = grid.position(a);
  parallel_for(s, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t xp = lo; xp < hi; ++xp) {
      double gx = 0.0, gy = 0.0, gz = 0.0;
      for (std::size_t idx : nz) {
        if (idx == xp) continue;  // (x - x') vanishes at the same cell
        double dx = pos[idx][0] - pos[xp][0];
        double dy = pos[idx][1] - pos[xp][1];
        double dz = pos[idx][2] - pos[xp][2];
        double r2 = dx * dx + dy * dy + dz * dz;
        double w = vol * mass(idx) / (r2 * std::sqrt(r2));
        gx += w * dx;
        gy += w * dy;
        gz += w * dz;
      }
      gfield(xp, 0) = gx;
      gfield(xp, 1) = gy;
      gfield(xp, 2) = gz;
    }
  });
  return gfield;
}

double force_variance_grid(const RealVector& mass, const SpatialGrid& grid,
                           const DiscretizedKernel& D2_kernel, double T,
                           const Constants& constants, int threads) {
  require(T > 0.0, ErrorCode::InvalidCoupling, "averaging time must be positive");
  require_same_grid(grid, D2_kernel.grid, "D2 kernel grid does not match mass grid");
  RealMatrix gfield = force_kernel_field(mass, grid, constants, threads);
  const double vol = grid.cell_volume();
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    RealVector gc = gfield.col(c);
    if (gc.cwiseAbs().maxCoeff() == 0.0) continue;
    acc += vol * gc.dot(D2_kernel.apply(gc, threads));
  }
  return 2.0 * constants.G * constants.G / T * acc;
}

const char* squeeze_family_name(SqueezeFamily f) {
  switch (f) {
    case SqueezeFamily::ContinuousDirac: return "continuous_dirac";
    case SqueezeFamily::DiscreteLocal: return "discrete_local";
    case SqueezeFamily::DiosiPenrose: return "diosi_penrose";
  }
  return "unknown";
}

SqueezeFamily squeeze_family_from_name(const std::string& name) {
  for (SqueezeFamily f :
       {SqueezeFamily::ContinuousDirac, SqueezeFamily::DiscreteLocal, SqueezeFamily::DiosiPenrose})
    if (name == squeeze_family_name(f)) return f;
  fail(ErrorCode::UnsupportedFamily, "unknown squeeze family '" + name + "'");
}

void SqueezeScenario::validate() const {
  require(sigma_a > 0.0 && T > 0.0 && N > 0.0 && r_N > 0.0 && M_lambda > 0.0 && lambda > 0.0,
          ErrorCode::InvalidCoupling, "squeeze scenario fields must be strictly positive");
  switch (family) {
    case SqueezeFamily::ContinuousDirac:
      require(V_lambda > 0.0, ErrorCode::InvalidCoupling, "need V_lambda > 0");
      require(V_b > 0.0, ErrorCode::DivergentIntegral,
              "Dirac diffusion kernel over all space diverges; set a finite V_b");
      break;
    case SqueezeFamily::DiscreteLocal:
      require(m_N > 0.0, ErrorCode::InvalidCoupling, "need m_N > 0");
      break;
    case SqueezeFamily::DiosiPenrose:
      require(R_lambda > 0.0, ErrorCode::InvalidCoupling, "need R_lambda > 0");
      break;
  }
}

BoundReport squeeze(const SqueezeScenario& s, const Constants& pc) {
  s.validate();
  BoundReport rep;
  rep.inputs = s;
  const double G2 = pc.G * pc.G;
  const double sa2 = s.sigma_a * s.sigma_a;
  const double r4 = s.r_N * s.r_N * s.r_N * s.r_N;
  switch (s.family) {
    case SqueezeFamily::ContinuousDirac:
      rep.upper = sa2 * s.N * r4 * s.T / (s.V_b * G2);
      rep.lower = s.M_lambda * s.M_lambda / (s.V_lambda * s.lambda);
      rep.units = "kg^2 s m^-3";
      rep.quantity = "D2";
      break;
    case SqueezeFamily::DiscreteLocal:
      rep.upper = sa2 * s.N * r4 * s.T / (s.m_N * G2);
      rep.lower = s.M_lambda / s.lambda;
      rep.units = "kg s";
      rep.quantity = "l_P^3 D2 / m_P";
      break;
    case SqueezeFamily::DiosiPenrose:
      rep.upper = sa2 * s.N * s.r_N * s.r_N * s.r_N * s.T / G2;
      rep.lower = s.M_lambda * s.M_lambda / (s.R_lambda * s.lambda);
      rep.units = "kg^2 s m^-1";
      rep.quantity = "l_P^2 D2";
      break;
  }
  rep.squeezed_out = rep.lower > rep.upper;
  return rep;
}

double squeeze_predicted_sigma_a2(const SqueezeScenario& s, double bounded_coupling,
                                  const Constants& pc) {
  const double G2 = pc.G * pc.G;
  const double r4 = s.r_N * s.r_N * s.r_N * s.r_N;
  switch (s.family) {
    case SqueezeFamily::ContinuousDirac:
      require(s.V_b > 0.0, ErrorCode::DivergentIntegral,
              "Dirac diffusion kernel over all space diverges; set a finite V_b");
      return bounded_coupling * s.V_b * G2 / (s.N * r4 * s.T);
    case SqueezeFamily::DiscreteLocal:
      return bounded_coupling * s.m_N * G2 / (s.N * r4 * s.T);
    case SqueezeFamily::DiosiPenrose:
      return bounded_coupling * G2 / (s.N * s.r_N * s.r_N * s.r_N * s.T);
  }
  return 0.0;
}

EnergyReport energy_production(double rho_mean, double volume, double lambda, double age,
                               std::optional<double> rho_reference, const Constants& pc) {
  require(lambda > 0.0, ErrorCode::MissingDecoherenceRate, "need a decoherence rate > 0");
  require(rho_mean >= 0.0 && volume >= 0.0 && age >= 0.0, ErrorCode::InvalidCoupling,
          "mass density, volume and age must be non-negative");
  const double pref = pc.c * pc.c * pc.G * kPi / (12.0 * lambda);
  EnergyReport rep;
  rep.dEdt = pref * rho_mean * rho_mean * volume;
  double rr = rho_reference.value_or(rho_mean);
  rep.rate_density = pref * rr * rr;
  rep.accumulated = rep.rate_density * age;
  return rep;
}

}  // namespace cqgrav
