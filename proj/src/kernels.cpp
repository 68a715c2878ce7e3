#include "cqgrav/kernels.hpp"

#include <cmath>
#include <numbers>

#include "cqgrav/parallel.hpp"
#include "cqgrav/rng.hpp"

namespace cqgrav {

namespace {
constexpr double kPi = std::numbers::pi;

double distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Normalized 1D Gaussian of variance r0^2.
double gauss1(double u, double r0) {
  return std::exp(-0.5 * u * u / (r0 * r0)) / std::sqrt(2.0 * kPi * r0 * r0);
}

// Physicists' Hermite polynomial H_m(t) by recurrence.
double hermite(int m, double t) {
  double h0 = 1.0;
  if (m == 0) return h0;
  double h1 = 2.0 * t;
  for (int k = 1; k < m; ++k) {
    double h2 = 2.0 * t * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// Per-axis truncated inverse factor: sum_n (-1)^n/(2^n n!) H_2n(u/(r0 sqrt2)).
// Together with the variance-r0^2 Gaussian this represents the operator
// series sum_n (-1)^n r0^{2n}/n! grad^{2n} applied to the Gaussian, whose
// convolution with g_N tends to delta.
double inverse_factor_1d(double u, double r0, int order) {
  double t = u / (r0 * std::numbers::sqrt2);
  double sum = 0.0;
  double c = 1.0;  // (-1)^n / (2^n n!)
  for (int n = 0; n <= order; ++n) {
    if (n > 0) c *= -1.0 / (2.0 * n);
    sum += c * hermite(2 * n, t);
  }
  return sum;
}

// Discrete neighbor test: returns axis if a,b differ by one step on exactly
// one axis, else -1 (with a==b mapped to -2).
int neighbor_axis(const SpatialGrid& g, std::size_t a, std::size_t b) {
  if (a == b) return -2;
  auto ia = g.unravel(a), ib = g.unravel(b);
  int axis = -1;
  for (int i = 0; i < g.dim(); ++i) {
    int diff = std::abs(ia[i] - ib[i]);
    if (diff == 0) continue;
    if (diff > 1 || axis != -1) return -1;
    axis = i;
  }
  return axis;
}

// (-L)_ab entries of the reflecting-boundary Laplacian matrix.
double neg_laplacian_entry(const SpatialGrid& g, std::size_t a, std::size_t b) {
  int ax = neighbor_axis(g, a, b);
  if (ax == -2) {
    double diag = 0.0;
    for (int i = 0; i < g.dim(); ++i) {
      double h2 = g.spacing(i) * g.spacing(i);
      if (g.neighbor(a, i, +1) != SpatialGrid::npos) diag += 1.0 / h2;
      if (g.neighbor(a, i, -1) != SpatialGrid::npos) diag += 1.0 / h2;
    }
    return diag;
  }
  if (ax >= 0) return -1.0 / (g.spacing(ax) * g.spacing(ax));
  return 0.0;
}

// Apply a separable per-axis kernel: y = vol * amp * (G_0 x G_1 x ...) f,
// where G_i has entries axis_fn(u_i, axis).
RealVector apply_separable(const SpatialGrid& g, const RealVector& f, double amp,
                           const std::function<double(double, int)>& axis_fn) {
  RealVector cur = f;
  std::vector<std::size_t> strides(g.dim());
  // recompute strides (last axis fastest)
  strides[g.dim() - 1] = 1;
  for (int i = g.dim() - 2; i >= 0; --i) strides[i] = strides[i + 1] * g.sites(i + 1);
  for (int ax = 0; ax < g.dim(); ++ax) {
    const int n = g.sites(ax);
    const double h = g.spacing(ax);
    RealMatrix G(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = axis_fn((r - c) * h, ax);
    RealVector next = RealVector::Zero(cur.size());
    const std::size_t stride = strides[ax];
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < static_cast<std::size_t>(cur.size()); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (int r = 0; r < n; ++r) {
          double acc = 0.0;
          for (int c = 0; c < n; ++c) acc += G(r, c) * cur(base + off + c * stride);
          next(base + off + r * stride) = acc;
        }
      }
    }
    cur = std::move(next);
  }
  return amp * g.cell_volume() * cur;
}

}  // namespace

const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Dirac: return "dirac";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::DiosiPenrose: return "diosi_penrose";
    case KernelFamily::LaplaceBeltramiWeakField: return "laplace_beltrami_weak_field";
    case KernelFamily::LaplacianOfDelta: return "laplacian_of_delta";
    case KernelFamily::DiscreteJumpLocal: return "discrete_jump_local";
  }
  return "unknown";
}

KernelFamily family_from_name(const std::string& name) {
  for (KernelFamily f : {KernelFamily::Dirac, KernelFamily::Gaussian, KernelFamily::DiosiPenrose,
                         KernelFamily::LaplaceBeltramiWeakField, KernelFamily::LaplacianOfDelta,
                         KernelFamily::DiscreteJumpLocal})
    if (name == family_name(f)) return f;
  fail(ErrorCode::UnsupportedFamily, "unknown kernel family '" + name + "'");
}

double DiscretizedKernel::entry(std::size_t a, std::size_t b) const {
  switch (form) {
    case Form::Dense:
      return dense(a, b);
    case Form::Diagonal:
      return a == b ? weights(a) / grid.cell_volume() : 0.0;
    case Form::GaussianProduct: {
      auto xa = grid.position(a), xb = grid.position(b);
      double v = amp;
      for (int i = 0; i < grid.dim(); ++i) v *= gauss1(xa[i] - xb[i], r0);
      return v;
    }
    case Form::GaussianInverse: {
      auto xa = grid.position(a), xb = grid.position(b);
      double v = amp;
      for (int i = 0; i < grid.dim(); ++i) {
        double u = xa[i] - xb[i];
        v *= inverse_factor_1d(u, r0, order) * gauss1(u, r0);
      }
      return v;
    }
    case Form::InverseDistance: {
      if (a == b) return amp * 1.5 / grid.cell_radius();
      return amp / distance(grid.position(a), grid.position(b));
    }
    case Form::NegLaplacianDelta:
      return amp * neg_laplacian_entry(grid, a, b) / grid.cell_volume();
    case Form::WeightedNegLaplacianDelta:
      return amp * 0.5 * (weights(a) + weights(b)) * neg_laplacian_entry(grid, a, b) /
             grid.cell_volume();
  }
  return 0.0;
}

RealVector DiscretizedKernel::apply(const RealVector& f, int threads) const {
  require(static_cast<std::size_t>(f.size()) == grid.size(), ErrorCode::GridMismatch,
          "field size does not match kernel grid");
  const double vol = grid.cell_volume();
  switch (form) {
    case Form::Diagonal:
      return weights.cwiseProduct(f);
    case Form::NegLaplacianDelta:
      return -amp * apply_laplacian(grid, f);
    case Form::WeightedNegLaplacianDelta: {
      RealVector lf = apply_laplacian(grid, f);
      RealVector wf = weights.cwiseProduct(f);
      RealVector lwf = apply_laplacian(grid, wf);
      return -amp * 0.5 * (weights.cwiseProduct(lf) + lwf);
    }
    case Form::GaussianProduct:
      return apply_separable(grid, f, amp, [this](double u, int) { return gauss1(u, r0); });
    case Form::GaussianInverse:
      return apply_separable(grid, f, amp, [this](double u, int) {
        return inverse_factor_1d(u, r0, order) * gauss1(u, r0);
      });
    case Form::Dense:
      return vol * (dense * f);
    case Form::InverseDistance: {
      const std::size_t s = grid.size();
      RealVector out(s);
      std::vector<std::array<double, 3>> pos(s);
      for (std::size_t i = 0; i < s; ++i) pos[i] = grid.position(i);
      const double diag = amp * 1.5 / grid.cell_radius();
      parallel_for(s, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t a = lo; a < hi; ++a) {
          double acc = diag * f(a);
          const auto& xa = pos[a];
          for (std::size_t b = 0; b < s; ++b) {
            if (b == a) continue;
            double dx = xa[0] - pos[b][0], dy = xa[1] - pos[b][1], dz = xa[2] - pos[b][2];
            acc += amp * f(b) / std::sqrt(dx * dx + dy * dy + dz * dz);
          }
          out(a) = vol * acc;
        }
      });
      return out;
    }
  }
  return RealVector::Zero(f.size());
}

RealMatrix DiscretizedKernel::materialize(std::size_t max_sites) const {
  const std::size_t s = grid.size();
  require(s <= max_sites, ErrorCode::GridMismatch,
          "grid too large to materialize a dense kernel");
  if (form == Form::Dense) return dense;
  RealMatrix m(s, s);
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b) m(a, b) = entry(a, b);
  return m;
}

double DiscretizedKernel::symmetry_defect(int probes, std::uint64_t seed) const {
  Rng rng(seed);
  const std::size_t s = grid.size();
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    std::size_t a = rng.next_u64() % s;
    std::size_t b = rng.next_u64() % s;
    worst = std::max(worst, std::abs(entry(a, b) - entry(b, a)));
  }
  return worst;
}

DiscretizedKernel DiscretizedKernel::dense_from(const SpatialGrid& g, RealMatrix values,
                                                std::string units) {
  DiscretizedKernel k;
  k.grid = g;
  k.form = Form::Dense;
  k.dense = std::move(values);
  k.units = std::move(units);
  return k;
}

DiscretizedKernel discretize(const KernelSpec& spec, const SpatialGrid& grid,
                             const Constants& constants) {
  require(spec.coupling >= 0.0, ErrorCode::InvalidCoupling, "kernel coupling must be >= 0");
  DiscretizedKernel k;
  k.grid = grid;
  k.units = spec.units;
  switch (spec.family) {
    case KernelFamily::Dirac:
      k.form = DiscretizedKernel::Form::Diagonal;
      k.weights = RealVector::Constant(grid.size(), spec.coupling);
      break;
    case KernelFamily::Gaussian: {
      require(spec.r0 > 0.0, ErrorCode::InvalidCoupling, "Gaussian kernel needs r0 > 0");
      for (int i = 0; i < grid.dim(); ++i)
        require(grid.spacing(i) <= spec.r0 / 3.0, ErrorCode::ResolutionTooCoarse,
                "need at least 3 cells per r0");
      k.form = DiscretizedKernel::Form::GaussianProduct;
      k.amp = spec.coupling;
      k.r0 = spec.r0;
      break;
    }
    case KernelFamily::DiosiPenrose:
      k.form = DiscretizedKernel::Form::InverseDistance;
      k.amp = spec.coupling;
      break;
    case KernelFamily::LaplacianOfDelta:
      k.form = DiscretizedKernel::Form::NegLaplacianDelta;
      k.amp = spec.coupling;
      break;
    case KernelFamily::LaplaceBeltramiWeakField: {
      k.form = DiscretizedKernel::Form::WeightedNegLaplacianDelta;
      k.amp = spec.coupling / 8.0;
      if (spec.background_potential.size()) {
        require(static_cast<std::size_t>(spec.background_potential.size()) == grid.size(),
                ErrorCode::GridMismatch, "background potential size mismatch");
        k.weights = RealVector::Ones(grid.size()) + spec.background_potential;
      } else {
        k.weights = RealVector::Ones(grid.size());
      }
      break;
    }
    case KernelFamily::DiscreteJumpLocal: {
      require(static_cast<std::size_t>(spec.mass_field.size()) == grid.size(),
              ErrorCode::GridMismatch, "discrete-jump kernel needs a mass field");
      double lp = constants.planck_length();
      double scale = spec.coupling * lp * lp * lp / constants.planck_mass();
      k.form = DiscretizedKernel::Form::Diagonal;
      k.weights = scale * spec.mass_field;
      break;
    }
  }
  return k;
}

double gaussian_inverse_series_coefficient(int n, double r0) {
  require(n >= 0, ErrorCode::InvalidCoupling, "series order must be >= 0");
  double c = 1.0;
  for (int k = 1; k <= n; ++k) c *= -r0 * r0 / (2.0 * k);
  return c;
}

DiscretizedKernel invert_gaussian(double r0, int order_N, const SpatialGrid& grid) {
  require(r0 > 0.0, ErrorCode::InvalidCoupling, "r0 must be positive");
  require(order_N >= 0, ErrorCode::InvalidCoupling, "order must be >= 0");
  // |H_2N| grows like (2t)^{2N}; refuse configurations that overflow doubles.
  double diag = 0.0;
  for (int i = 0; i < grid.dim(); ++i) diag += grid.extent(i) * grid.extent(i);
  double tmax = std::sqrt(diag) / (r0 * std::numbers::sqrt2);
  if (order_N > 0 && 2.0 * order_N * std::log10(std::max(2.0 * tmax, 2.0)) > 280.0)
    fail(ErrorCode::OverflowGuard, "order_N * extent / r0 too large for double precision");
  DiscretizedKernel k;
  k.grid = grid;
  k.form = DiscretizedKernel::Form::GaussianInverse;
  k.amp = 1.0;
  k.r0 = r0;
  k.order = order_N;
  k.units = "inverse of normalized gaussian";
  return k;
}

DiscretizedKernel invert_dp(const SpatialGrid& grid) {
  DiscretizedKernel k;
  k.grid = grid;
  k.form = DiscretizedKernel::Form::NegLaplacianDelta;
  k.amp = 1.0 / (4.0 * kPi);
  k.units = "m^-2 * delta";  // relative to the 1/|x-y| input tag
  return k;
}

std::pair<DiscretizedKernel, DiscretizedKernel> saturating_pair(
    const KernelSpec& d0_spec, const SpatialGrid& grid, const SaturatingPairOptions& opt) {
  const double w = 0.5 * opt.drift * opt.drift;  // (1/2) D1 D0^-1 D1^dag prefactor
  switch (d0_spec.family) {
    case KernelFamily::Gaussian: {
      double lambda = d0_spec.coupling;
      require(lambda > 0.0, ErrorCode::InvalidCoupling, "Gaussian pair needs lambda > 0");
      KernelSpec d0 = d0_spec;
      double r03 = d0_spec.r0 * d0_spec.r0 * d0_spec.r0;
      d0.coupling = lambda * r03 / (opt.m0 * opt.m0);
      DiscretizedKernel D0 = discretize(d0, grid);
      D0.units = d0_spec.units;
      DiscretizedKernel D2 = invert_gaussian(d0_spec.r0, opt.gauss_order, grid);
      D2.amp = w * opt.m0 * opt.m0 / (r03 * lambda);
      D2.units = "kg^2 s m^-3 kernel";
      return {D0, D2};
    }
    case KernelFamily::DiosiPenrose: {
      require(d0_spec.coupling > 0.0, ErrorCode::InvalidCoupling, "DP pair needs coupling > 0");
      DiscretizedKernel D0 = discretize(d0_spec, grid);
      DiscretizedKernel D2 = invert_dp(grid);
      D2.amp *= w / d0_spec.coupling;
      D2.units = "kg^2 s m^-3 kernel";
      return {D0, D2};
    }
    case KernelFamily::LaplaceBeltramiWeakField: {
      require(d0_spec.coupling > 0.0, ErrorCode::InvalidCoupling,
              "Laplace-Beltrami pair needs coupling > 0");
      DiscretizedKernel D2 = discretize(d0_spec, grid);
      // 0th order in Phi the saturating Lindbladian kernel is Diosi-Penrose:
      // w * D0^-1 = (D/8)(-lap delta) fixes the coupling to drift^2/(pi D).
      KernelSpec dp;
      dp.family = KernelFamily::DiosiPenrose;
      dp.coupling = 2.0 * w / (kPi * d0_spec.coupling);
      DiscretizedKernel D0 = discretize(dp, grid);
      if (opt.drift == 0.0) D2.amp = 0.0;
      return {D0, D2};
    }
    default:
      fail(ErrorCode::UnsupportedFamily,
           std::string("no saturating pair for family ") + family_name(d0_spec.family));
  }
}

RealVector apply_laplacian(const SpatialGrid& grid, const RealVector& f) {
  require(static_cast<std::size_t>(f.size()) == grid.size(), ErrorCode::GridMismatch,
          "field size does not match grid");
  RealVector out = RealVector::Zero(f.size());
  for (std::size_t a = 0; a < grid.size(); ++a) {
    double acc = 0.0;
    for (int i = 0; i < grid.dim(); ++i) {
      double h2 = grid.spacing(i) * grid.spacing(i);
      std::size_t up = grid.neighbor(a, i, +1);
      std::size_t dn = grid.neighbor(a, i, -1);
      if (up != SpatialGrid::npos) acc += (f(up) - f(a)) / h2;
      if (dn != SpatialGrid::npos) acc += (f(dn) - f(a)) / h2;
    }
    out(a) = acc;
  }
  return out;
}

double min_eigenvalue_estimate(const DiscretizedKernel& k, int iters, std::uint64_t seed,
                               int threads) {
  const std::size_t s = k.grid.size();
  const double vol = k.grid.cell_volume();
  Rng rng(seed);
  auto matvec = [&](const RealVector& x) { return RealVector(k.apply(x, threads) / vol); };
  RealVector v(s);
  for (std::size_t i = 0; i < s; ++i) v(i) = rng.normal();
  v.normalize();
  double lmax = 0.0;
  for (int it = 0; it < iters; ++it) {
    RealVector w = matvec(v);
    lmax = v.dot(w);
    double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  double shift = std::abs(lmax) * 1.5 + 1e-30;
  for (std::size_t i = 0; i < s; ++i) v(i) = rng.normal();
  v.normalize();
  double mu = 0.0;
  for (int it = 0; it < iters; ++it) {
    RealVector w = shift * v - matvec(v);
    mu = v.dot(w);
    double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  return shift - mu;
}

}  // namespace cqgrav
