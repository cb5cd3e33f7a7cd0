// Surface representations and synthesis.
//
// Three height-profile forms appear in the pipeline:
//   SurfaceModel    spline-coefficient profile, the inverse solver's unknown;
//   GriddedSurface  dense uniform grid + natural cubic interpolant, used for
//                   reference profiles of every kind (random, analytic, fitted)
//                   so error evaluation goes through one interpolation path;
//   SampledSurface  per-segment midpoint geometry consumed by the solver.
//
// Random surfaces are Gaussian with Gaussian roughness spectrum
//   W(k) = h^2 l / (2 sqrt(pi)) exp(-k^2 l^2 / 4),
// synthesized spectrally: Hermitian-symmetric amplitudes sqrt(2 pi L W(k_j))
// scaled by unit complex gaussians, one inverse FFT, cosine edge taper. The
// DC bin is zeroed, which makes the pre-taper sample mean exactly zero.

#pragma once

#include <surfscat/numerics.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace surfscat::surface {

// Centered cardinal B-spline of degree `order` in truncated-power form,
// support |t| < (order+1)/2.
inline double bspline_value(int order, double t) {
  if (order < 1) throw std::invalid_argument("bspline_value: order must be >= 1");
  const double half = 0.5 * (order + 1);
  if (!(std::abs(t) < half)) return 0.0;
  double fact = 1.0;
  for (int m = 2; m <= order; ++m) fact *= m;
  double binom = 1.0;  // C(order+1, q)
  double sum = 0.0;
  double sign = 1.0;
  for (int q = 0; q <= order + 1; ++q) {
    const double arg = t + half - q;
    if (arg >= 0.0) {
      double pw = 1.0;
      for (int m = 0; m < order; ++m) pw *= arg;
      sum += sign * binom * pw;
    }
    binom *= static_cast<double>(order + 1 - q) / (q + 1);
    sign = -sign;
  }
  return sum / fact;
}

// d/dt of bspline_value. Piecewise constant for order 1.
inline double bspline_derivative(int order, double t) {
  if (order < 1) throw std::invalid_argument("bspline_derivative: order must be >= 1");
  const double half = 0.5 * (order + 1);
  if (!(std::abs(t) < half)) return 0.0;
  double fact = 1.0;
  for (int m = 2; m <= order - 1; ++m) fact *= m;
  double binom = 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int q = 0; q <= order + 1; ++q) {
    const double arg = t + half - q;
    if (arg >= 0.0) {
      double pw = 1.0;
      for (int m = 0; m < order - 1; ++m) pw *= arg;
      sum += sign * binom * pw;
    }
    binom *= static_cast<double>(order + 1 - q) / (q + 1);
    sign = -sign;
  }
  return sum / fact;
}

// Uniformly spaced spline centers, inset so every basis function's support is
// contained in [-L/2, L/2]: scale g = L/(count+5), centers (i+3)g - L/2 for
// i = 0..count-1.
struct SplineBasis {
  int count = 0;
  int order = 3;
  double domain_length = 0.0;
  double scale = 0.0;
  std::vector<double> centers;

  static SplineBasis make(int count, int order, double domain_length) {
    if (count < 1) throw std::invalid_argument("SplineBasis: count must be >= 1");
    if (order < 1 || order > 5) {
      throw std::invalid_argument("SplineBasis: order out of range");
    }
    if (!(domain_length > 0.0)) {
      throw std::invalid_argument("SplineBasis: domain_length must be positive");
    }
    SplineBasis b;
    b.count = count;
    b.order = order;
    b.domain_length = domain_length;
    b.scale = domain_length / (count + 5);
    b.centers.resize(count);
    for (int i = 0; i < count; ++i) {
      b.centers[i] = (i + 3) * b.scale - 0.5 * domain_length;
    }
    return b;
  }

  double value(int i, double x) const {
    return bspline_value(order, (x - centers[i]) / scale);
  }
  double derivative(int i, double x) const {
    return bspline_derivative(order, (x - centers[i]) / scale) / scale;
  }
};

// Spline-coefficient profile: s(x) = sum_i c_i phi((x - x_i)/g).
struct SurfaceModel {
  SplineBasis basis;
  Eigen::VectorXd coeffs;

  static SurfaceModel zero(SplineBasis b) {
    SurfaceModel m;
    m.coeffs = Eigen::VectorXd::Zero(b.count);
    m.basis = std::move(b);
    return m;
  }

  double eval(double x) const {
    double s = 0.0;
    for (int i = first_support(x); i < last_support(x); ++i) {
      s += coeffs[i] * basis.value(i, x);
    }
    return s;
  }

  double slope(double x) const {
    double s = 0.0;
    for (int i = first_support(x); i < last_support(x); ++i) {
      s += coeffs[i] * basis.derivative(i, x);
    }
    return s;
  }

 private:
  int first_support(double x) const {
    const double lo = (x - basis.centers[0]) / basis.scale - 0.5 * (basis.order + 1);
    return std::clamp(static_cast<int>(std::ceil(lo)), 0, basis.count);
  }
  int last_support(double x) const {
    const double hi = (x - basis.centers[0]) / basis.scale + 0.5 * (basis.order + 1);
    return std::clamp(static_cast<int>(std::floor(hi)) + 1, 0, basis.count);
  }
};

// Heights on a uniform closed grid over [-L/2, L/2] with a natural cubic
// interpolant. Evaluation clamps to the domain (queries outside only arise
// from end-point rounding).
struct GriddedSurface {
  double domain_length = 0.0;
  std::vector<double> x;          // n+1 knots
  std::vector<double> heights;    // n+1 values
  std::vector<double> curvature;  // second derivatives, natural ends

  static GriddedSurface from_samples(double domain_length,
                                     std::vector<double> heights) {
    if (heights.size() < 4) {
      throw std::invalid_argument("GriddedSurface: need at least 4 samples");
    }
    if (!(domain_length > 0.0)) {
      throw std::invalid_argument("GriddedSurface: domain_length must be positive");
    }
    GriddedSurface g;
    g.domain_length = domain_length;
    g.heights = std::move(heights);
    const std::size_t n = g.heights.size() - 1;
    g.x.resize(n + 1);
    const double dx = domain_length / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
      g.x[i] = -0.5 * domain_length + dx * static_cast<double>(i);
    }
    g.solve_curvature();
    return g;
  }

  double eval(double q) const {
    const auto [i, u, dx] = locate(q);
    const double a = 1.0 - u;
    return a * heights[i] + u * heights[i + 1] +
           (dx * dx / 6.0) *
               ((a * a * a - a) * curvature[i] + (u * u * u - u) * curvature[i + 1]);
  }

  double slope(double q) const {
    const auto [i, u, dx] = locate(q);
    const double a = 1.0 - u;
    return (heights[i + 1] - heights[i]) / dx +
           (dx / 6.0) *
               (-(3.0 * a * a - 1.0) * curvature[i] + (3.0 * u * u - 1.0) * curvature[i + 1]);
  }

 private:
  struct Cell {
    std::size_t i;
    double u;
    double dx;
  };

  Cell locate(double q) const {
    const std::size_t n = heights.size() - 1;
    const double dx = domain_length / static_cast<double>(n);
    const double t = std::clamp((q + 0.5 * domain_length) / dx, 0.0,
                                static_cast<double>(n) - 1e-12);
    const std::size_t i = static_cast<std::size_t>(t);
    return {i, t - static_cast<double>(i), dx};
  }

  void solve_curvature() {
    const std::size_t n = heights.size() - 1;
    const double dx = domain_length / static_cast<double>(n);
    curvature.assign(n + 1, 0.0);
    if (n < 2) return;
    // Thomas algorithm on the interior tridiagonal system
    // (dx/6) M_{i-1} + (2dx/3) M_i + (dx/6) M_{i+1} = d2 y_i / dx.
    std::vector<double> c(n - 1), d(n - 1);
    const double diag = 2.0 * dx / 3.0;
    const double off = dx / 6.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double rhs = (heights[i + 1] - 2.0 * heights[i] + heights[i - 1]) / dx;
      if (i == 1) {
        c[0] = off / diag;
        d[0] = rhs / diag;
      } else {
        const double m = diag - off * c[i - 2];
        c[i - 1] = off / m;
        d[i - 1] = (rhs - off * d[i - 2]) / m;
      }
    }
    for (std::size_t i = n - 1; i >= 1; --i) {
      curvature[i] = d[i - 1] - (i < n - 1 ? c[i - 1] * curvature[i + 1] : 0.0);
    }
  }
};

// Cosine ramp of width r at each end of [-L/2, L/2]; 1 in the interior, 0
// with zero slope at the ends.
inline double taper_value(double x, double domain_length, double ramp) {
  const double half = 0.5 * domain_length;
  const double ax = std::abs(x);
  if (ramp <= 0.0) return ax <= half ? 1.0 : 0.0;
  if (ax >= half) return 0.0;
  const double edge = half - ramp;
  if (ax <= edge) return 1.0;
  return 0.5 * (1.0 + std::cos(numerics::pi * (ax - edge) / ramp));
}

struct RandomSurfaceParams {
  double corr_length = 0.0;    // l (m)
  double height_std = 0.0;     // h (m)
  double domain_length = 16.0; // L (m)
  int grid_count = 2048;       // power of two
  double edge_taper = 0.25;    // r (m)
};

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace detail

inline GriddedSurface generate_gaussian_surface(const RandomSurfaceParams& p,
                                                std::uint64_t seed) {
  if (!(p.corr_length > 0.0)) {
    throw std::invalid_argument("generate_gaussian_surface: corr_length must be positive");
  }
  if (p.height_std < 0.0) {
    throw std::invalid_argument("generate_gaussian_surface: height_std must be >= 0");
  }
  if (!(p.domain_length > 0.0)) {
    throw std::invalid_argument("generate_gaussian_surface: domain_length must be positive");
  }
  if (!detail::is_pow2(p.grid_count) || p.grid_count < 256) {
    throw std::invalid_argument(
        "generate_gaussian_surface: grid_count must be a power of two >= 256");
  }
  if (p.edge_taper < 0.0 || p.edge_taper >= 0.5 * p.domain_length) {
    throw std::invalid_argument("generate_gaussian_surface: edge_taper out of range");
  }

  const int n = p.grid_count;
  const double length = p.domain_length;
  std::vector<double> heights(static_cast<std::size_t>(n) + 1, 0.0);

  if (p.height_std > 0.0) {
    numerics::SeededRng rng(seed);
    const double l = p.corr_length;
    const double h = p.height_std;
    const double spec_scale = h * h * l / (2.0 * std::sqrt(numerics::pi));
    std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(n),
                                               {0.0, 0.0});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 1; j <= n / 2; ++j) {
      const double k = 2.0 * numerics::pi * j / length;
      const double w = spec_scale * std::exp(-0.25 * k * k * l * l);
      const double amp = std::sqrt(2.0 * numerics::pi * length * w);
      if (j < n / 2) {
        const double ga = rng.gaussian();
        const double gb = rng.gaussian();
        spectrum[static_cast<std::size_t>(j)] =
            amp * inv_sqrt2 * std::complex<double>(ga, gb);
        spectrum[static_cast<std::size_t>(n - j)] =
            std::conj(spectrum[static_cast<std::size_t>(j)]);
      } else {
        spectrum[static_cast<std::size_t>(j)] = amp * rng.gaussian();
      }
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> field;
    fft.inv(field, spectrum);
    for (int i = 0; i < n; ++i) {
      const double xi = -0.5 * length + length * i / n;
      heights[static_cast<std::size_t>(i)] =
          (n / length) * field[static_cast<std::size_t>(i)].real() *
          taper_value(xi, length, p.edge_taper);
    }
    // Periodic wrap; with a nonzero taper both ends are exactly zero.
    heights[static_cast<std::size_t>(n)] = heights[0];
  }

  return GriddedSurface::from_samples(length, std::move(heights));
}

// Piecewise-linear test profile with step discontinuities:
// x+4 on [-6,-3), x on [0,2), 4-x on [2,4), 0 elsewhere.
inline double triangular_profile(double x) {
  if (x >= -6.0 && x < -3.0) return x + 4.0;
  if (x >= 0.0 && x < 2.0) return x;
  if (x >= 2.0 && x < 4.0) return 4.0 - x;
  return 0.0;
}

// Rasterize an analytic profile onto the uniform grid + cubic interpolant so
// downstream evaluation treats every reference kind identically.
inline GriddedSurface rasterize(const std::function<double(double)>& f,
                                double domain_length, int grid_count) {
  if (grid_count < 4) throw std::invalid_argument("rasterize: grid too small");
  std::vector<double> heights(static_cast<std::size_t>(grid_count) + 1);
  for (int i = 0; i <= grid_count; ++i) {
    const double xi = -0.5 * domain_length + domain_length * i / grid_count;
    heights[static_cast<std::size_t>(i)] = f(xi);
  }
  return GriddedSurface::from_samples(domain_length, std::move(heights));
}

// Midpoint geometry for the discretized integral equations: N = round(L/w)
// equal segments, heights/slopes at segment midpoints, arc-length quadrature
// weights w sqrt(1 + s'^2).
struct SampledSurface {
  double domain_length = 0.0;
  double width = 0.0;                 // recomputed segment width
  std::vector<double> x;              // midpoints
  std::vector<double> heights;
  std::vector<double> slopes;
  std::vector<double> weights;        // arc-length quadrature weights

  int count() const { return static_cast<int>(x.size()); }
};

namespace detail {

template <class Eval, class Slope>
SampledSurface sample_surface_impl(double domain_length, double target_width,
                                   Eval&& eval, Slope&& slope) {
  if (!(target_width > 0.0)) {
    throw std::invalid_argument("sample_surface: width must be positive");
  }
  const int n = static_cast<int>(std::lround(domain_length / target_width));
  if (n < 2) {
    throw std::invalid_argument("sample_surface: fewer than 2 segments");
  }
  SampledSurface s;
  s.domain_length = domain_length;
  s.width = domain_length / n;
  s.x.resize(n);
  s.heights.resize(n);
  s.slopes.resize(n);
  s.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double xi = -0.5 * domain_length + (i + 0.5) * s.width;
    const double sl = slope(xi);
    s.x[i] = xi;
    s.heights[i] = eval(xi);
    s.slopes[i] = sl;
    s.weights[i] = s.width * std::sqrt(1.0 + sl * sl);
  }
  return s;
}

}  // namespace detail

inline SampledSurface sample_surface(const SurfaceModel& m, double target_width) {
  return detail::sample_surface_impl(
      m.basis.domain_length, target_width,
      [&](double x) { return m.eval(x); }, [&](double x) { return m.slope(x); });
}

inline SampledSurface sample_surface(const GriddedSurface& g, double target_width) {
  return detail::sample_surface_impl(
      g.domain_length, target_width,
      [&](double x) { return g.eval(x); }, [&](double x) { return g.slope(x); });
}

// Least-squares spline fit to scattered samples. Requires at least as many
// samples as coefficients and a full-rank design.
inline SurfaceModel fit_spline(const std::vector<double>& xs,
                               const std::vector<double>& ys,
                               SplineBasis basis) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("fit_spline: size mismatch");
  }
  if (static_cast<int>(xs.size()) < basis.count) {
    throw std::invalid_argument("fit_spline: underdetermined fit");
  }
  Eigen::MatrixXd design(xs.size(), basis.count);
  Eigen::VectorXd rhs(xs.size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (int i = 0; i < basis.count; ++i) {
      design(static_cast<Eigen::Index>(r), i) = basis.value(i, xs[r]);
    }
    rhs[static_cast<Eigen::Index>(r)] = ys[r];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < basis.count) {
    throw std::runtime_error("fit_spline: rank-deficient design (samples miss basis support)");
  }
  SurfaceModel m;
  m.basis = std::move(basis);
  m.coeffs = qr.solve(rhs);
  return m;
}

// Pooled moments and autocorrelation e^-1 crossing over the interior
// |x| <= L/2 - margin of an ensemble of gridded surfaces.
struct SurfaceStatistics {
  double mean = 0.0;
  double stddev = 0.0;
  double corr_crossing = 0.0;  // 0 when the estimate is unavailable
  long samples = 0;
};

inline SurfaceStatistics ensemble_statistics(
    const std::vector<GriddedSurface>& ensemble, double margin) {
  if (ensemble.empty()) {
    throw std::invalid_argument("ensemble_statistics: empty ensemble");
  }
  const double length = ensemble.front().domain_length;
  const std::size_t n = ensemble.front().heights.size();
  for (const auto& g : ensemble) {
    if (g.heights.size() != n || g.domain_length != length) {
      throw std::invalid_argument("ensemble_statistics: inconsistent grids");
    }
  }
  const double dx = length / static_cast<double>(n - 1);
  std::size_t lo = 0, hi = n - 1;
  while (lo < n && std::abs(ensemble.front().x[lo]) > 0.5 * length - margin) ++lo;
  while (hi > 0 && std::abs(ensemble.front().x[hi]) > 0.5 * length - margin) --hi;
  if (hi <= lo + 8) {
    throw std::invalid_argument("ensemble_statistics: margin leaves no interior");
  }

  SurfaceStatistics st;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& g : ensemble) {
    for (std::size_t i = lo; i <= hi; ++i) {
      sum += g.heights[i];
      sum2 += g.heights[i] * g.heights[i];
      ++st.samples;
    }
  }
  st.mean = sum / static_cast<double>(st.samples);
  const double var = sum2 / static_cast<double>(st.samples) - st.mean * st.mean;
  st.stddev = std::sqrt(std::max(var, 0.0));

  // Pooled autocovariance, mean removed, swept until the e^-1 crossing.
  const double c0 = var;
  if (c0 > 0.0) {
    const double target = c0 * std::exp(-1.0);
    double prev = c0;
    const std::size_t max_lag = (hi - lo) / 2;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
      double acc = 0.0;
      long cnt = 0;
      for (const auto& g : ensemble) {
        for (std::size_t i = lo; i + lag <= hi; ++i) {
          acc += (g.heights[i] - st.mean) * (g.heights[i + lag] - st.mean);
          ++cnt;
        }
      }
      const double c = acc / static_cast<double>(cnt);
      if (c < target) {
        const double frac = (prev - target) / (prev - c);
        st.corr_crossing = (static_cast<double>(lag) - 1.0 + frac) * dx;
        break;
      }
      prev = c;
    }
  }
  return st;
}

}  // namespace surfscat::surface
