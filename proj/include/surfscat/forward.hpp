// Forward solver for a tapered beam hitting a rough interface between a
// lossless upper half-space and a (possibly lossy) lower half-space.
//
// Coupled surface integral equations, discretized with pulse basis functions
// on equal-width segments and point matching at the midpoints. Unknowns are
// the total field u and its normal derivative v on the interface, stacked as
// [u; v]. The surface normal points from the lower medium into the upper one,
// n = (-s', 1)/sqrt(1+s'^2).
//
// Kernels (time convention e^{-i w t}, outgoing H^(1)):
//   G(r,r') = (i/4) H0(k R)
//   K(r,r') = n'.grad' G = (i k/4) H1(k R) [(y-y') - s'(x')(x-x')] / (R sqrt(1+s'^2))
// Self terms use the small-argument closed form of the segment integral.

#pragma once

#include <surfscat/numerics.hpp>
#include <surfscat/surface.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace surfscat::forward {

using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::ComplexVector;

struct Medium {
  double eps_r = 1.0;  // relative permittivity
  double mu_r = 1.0;   // relative permeability
  double sigma = 0.0;  // conductivity (S/m)
};

// k = w sqrt(mu eps_c), eps_c = eps + i sigma/w; principal branch gives
// Re k > 0, Im k >= 0.
inline Complex wavenumber(const Medium& m, double frequency) {
  if (!(frequency > 0.0)) {
    throw std::invalid_argument("wavenumber: frequency must be positive");
  }
  if (!(m.eps_r > 0.0) || !(m.mu_r > 0.0) || m.sigma < 0.0) {
    throw std::invalid_argument("wavenumber: invalid medium parameters");
  }
  const double omega = 2.0 * numerics::pi * frequency;
  const Complex eps_c(numerics::eps0 * m.eps_r, m.sigma / omega);
  return omega * std::sqrt(numerics::mu0 * m.mu_r * eps_c);
}

// Tapered plane wave travelling along (sin a, -cos a). The Gaussian footprint
// of half-width g is centred on the beam axis through the origin; the phase
// correction keeps the taper an approximate Helmholtz solution.
struct IncidentWave {
  double angle = 0.0;  // radians from vertical
  double taper = 8.0;  // g (m)
};

inline Complex incident_field(const IncidentWave& w, double k1, double x,
                              double y) {
  if (!(w.taper > 0.0)) {
    throw std::invalid_argument("incident_field: taper must be positive");
  }
  if (!(std::abs(w.angle) < 1.48)) {  // ~85 degrees; tan/cos degenerate beyond
    throw std::invalid_argument("incident_field: angle out of range");
  }
  if (!(k1 > 0.0)) {
    throw std::invalid_argument("incident_field: wavenumber must be positive");
  }
  const double t = x + y * std::tan(w.angle);
  const double kdotr = k1 * (x * std::sin(w.angle) - y * std::cos(w.angle));
  const double gcos = k1 * w.taper * std::cos(w.angle);
  const double xi = (2.0 * t * t / (w.taper * w.taper) - 1.0) / (gcos * gcos);
  return std::polar(std::exp(-(t / w.taper) * (t / w.taper)),
                    kdotr * (1.0 + xi));
}

inline Complex green_G(Complex k, double xo, double yo, double xs, double ys) {
  const double r = std::hypot(xo - xs, yo - ys);
  if (r == 0.0) throw std::invalid_argument("green_G: coincident points");
  return Complex(0.0, 0.25) * numerics::hankel01(k * r).h0;
}

inline Complex green_K(Complex k, double xo, double yo, double xs, double ys,
                       double slope) {
  const double dx = xo - xs;
  const double dy = yo - ys;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) throw std::invalid_argument("green_K: coincident points");
  const double proj = dy - slope * dx;
  return Complex(0.0, 0.25) * k * numerics::hankel01(k * r).h1 * proj /
         (r * std::sqrt(1.0 + slope * slope));
}

namespace detail {

// Self term of the single-layer segment integral: w_i times the
// small-argument average of (i/4) H0 over a segment of arc length w_i.
inline Complex self_single_layer(Complex k, double wi) {
  const Complex lg = std::log(k * wi / 4.0);
  return wi * (Complex(0.0, 0.25) -
               (lg + Complex(numerics::euler_gamma - 1.0, 0.0)) /
                   (2.0 * numerics::pi));
}

}  // namespace detail

// Block system [[Z11, Z12], [Z21, Z22]] acting on [u; v]:
//   Z11 = 1/2 I - w K1,   Z12 =  w G1   (upper medium, field point from above)
//   Z21 = 1/2 I + w K2,   Z22 = -w G2   (lower medium, field point from below)
inline ComplexMatrix assemble_impedance(const surface::SampledSurface& s,
                                        Complex k1, Complex k2) {
  const int n = s.count();
  if (n < 2) throw std::invalid_argument("assemble_impedance: too few segments");
  ComplexMatrix z(2 * n, 2 * n);
  const Complex iq(0.0, 0.25);  // i/4

  for (int i = 0; i < n; ++i) {
    z(i, i) = Complex(0.5, 0.0);
    z(n + i, i) = Complex(0.5, 0.0);
    z(i, n + i) = detail::self_single_layer(k1, s.weights[i]);
    z(n + i, n + i) = -detail::self_single_layer(k2, s.weights[i]);
  }

  for (int i = 0; i < n; ++i) {
    const double xi = s.x[i], yi = s.heights[i];
    const double sli = s.slopes[i], wi = s.weights[i];
    const double nui = std::sqrt(1.0 + sli * sli);
    for (int j = i + 1; j < n; ++j) {
      const double dx = s.x[j] - xi;
      const double dy = s.heights[j] - yi;
      const double r = std::hypot(dx, dy);
      const auto h1 = numerics::hankel01(k1 * r);
      const auto h2 = numerics::hankel01(k2 * r);
      const double slj = s.slopes[j], wj = s.weights[j];
      const double nuj = std::sqrt(1.0 + slj * slj);

      const Complex g1 = iq * h1.h0;
      const Complex g2 = iq * h2.h0;
      // Test point j, source segment i (projection uses the source slope).
      const double proj_ji = (dy - sli * dx) / (r * nui);
      // Test point i, source segment j.
      const double proj_ij = (-dy + slj * dx) / (r * nuj);
      const Complex k1h = iq * k1 * h1.h1;
      const Complex k2h = iq * k2 * h2.h1;

      z(j, i) = -wi * k1h * proj_ji;
      z(i, j) = -wj * k1h * proj_ij;
      z(j, n + i) = wi * g1;
      z(i, n + j) = wj * g1;
      z(n + j, i) = wi * k2h * proj_ji;
      z(n + i, j) = wj * k2h * proj_ij;
      z(n + j, n + i) = -wi * g2;
      z(n + i, n + j) = -wj * g2;
    }
  }
  return z;
}

struct ForwardSolution {
  double frequency = 0.0;
  surface::SampledSurface surf;
  ComplexVector u;  // total field at midpoints
  ComplexVector v;  // normal derivative at midpoints
  double residual = 0.0;
};

inline ForwardSolution solve_forward(const surface::SampledSurface& s,
                                     Complex k1, Complex k2,
                                     const IncidentWave& wave,
                                     double frequency) {
  if (std::abs(k1.imag()) > 1e-12 * std::abs(k1)) {
    throw std::invalid_argument("solve_forward: upper medium must be lossless");
  }
  const int n = s.count();
  ComplexVector rhs(2 * n);
  for (int i = 0; i < n; ++i) {
    rhs[i] = incident_field(wave, k1.real(), s.x[i], s.heights[i]);
    rhs[n + i] = Complex(0.0, 0.0);
  }
  const ComplexMatrix z = assemble_impedance(s, k1, k2);
  const ComplexVector sol = numerics::lu_solve(z, rhs);
  if (!sol.allFinite()) {
    throw std::runtime_error("solve_forward: non-finite solution");
  }
  ForwardSolution out;
  out.frequency = frequency;
  out.surf = s;
  out.u = sol.head(n);
  out.v = sol.tail(n);
  out.residual = (z * sol - rhs).norm() / rhs.norm();
  return out;
}

struct ReceiverArray {
  std::vector<double> x;
  double height = 0.0;

  static ReceiverArray uniform(double x_start, double x_end, double dx,
                               double height, bool include_endpoint = true) {
    if (!(dx > 0.0) || !(x_end > x_start)) {
      throw std::invalid_argument("ReceiverArray: invalid extent or spacing");
    }
    int count = static_cast<int>(std::floor((x_end - x_start) / dx + 1e-9)) + 1;
    if (!include_endpoint &&
        std::abs(x_start + (count - 1) * dx - x_end) < 1e-9 * dx) {
      --count;
    }
    if (count < 1) throw std::invalid_argument("ReceiverArray: empty array");
    ReceiverArray r;
    r.height = height;
    r.x.resize(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) r.x[static_cast<std::size_t>(j)] = x_start + j * dx;
    return r;
  }
};

// Scattered field above the surface from the solved boundary data,
// u_sca(r) = sum_i [u_i K1(r, r_i) - v_i G1(r, r_i)] w_i.
inline ComplexVector scattered_field(const ForwardSolution& sol,
                                     const ReceiverArray& recv, Complex k1) {
  if (recv.x.empty()) {
    throw std::invalid_argument("scattered_field: no receivers");
  }
  const int n = sol.surf.count();
  double top = sol.surf.heights[0];
  for (double h : sol.surf.heights) top = std::max(top, h);
  if (!(recv.height > top)) {
    throw std::invalid_argument("scattered_field: receivers must sit above the surface");
  }
  ComplexVector out(static_cast<Eigen::Index>(recv.x.size()));
  for (std::size_t j = 0; j < recv.x.size(); ++j) {
    Complex acc(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
      const Complex kker = green_K(k1, recv.x[j], recv.height, sol.surf.x[i],
                                   sol.surf.heights[i], sol.surf.slopes[i]);
      const Complex gker = green_G(k1, recv.x[j], recv.height, sol.surf.x[i],
                                   sol.surf.heights[i]);
      acc += (sol.u[i] * kker - sol.v[i] * gker) * sol.surf.weights[i];
    }
    out[static_cast<Eigen::Index>(j)] = acc;
  }
  if (!out.allFinite()) {
    throw std::runtime_error("scattered_field: non-finite field");
  }
  return out;
}

}  // namespace surfscat::forward
