// Low-level numerics: Hankel functions of complex argument, dense solves,
// and the deterministic RNG used for surface/noise synthesis.
//
// Hankel evaluation strategy:
//   |z| <  12  ascending power series for J0,J1,Y0,Y1 (principal log branch),
//              accumulated in long double to absorb cancellation near the
//              crossover;
//   |z| >= 12  Hankel asymptotic expansion with term-recurrence and a
//              divergence guard (stop at the smallest term).
// Both branches are valid off the real axis; intended domain is Im(z) >= 0
// (outgoing waves in lossy media).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace surfscat::numerics {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

// SI constants (CODATA 2018).
inline constexpr double c0 = 299792458.0;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double mu0 = 1.25663706212e-6;

struct HankelPair {
  Complex h0;  // H0^(1)(z)
  Complex h1;  // H1^(1)(z)
};

namespace detail {

using LComplex = std::complex<long double>;

inline LComplex widen(Complex z) {
  return LComplex(static_cast<long double>(z.real()),
                  static_cast<long double>(z.imag()));
}

inline Complex narrow(LComplex z) {
  return Complex(static_cast<double>(z.real()), static_cast<double>(z.imag()));
}

// Ascending series. J0 = sum u_m, u_m = (-q)^m/(m!)^2, q = (z/2)^2;
// J1 = (z/2) sum v_m, v_m = (-q)^m/(m!(m+1)!);
// Y0 = (2/pi)[(log(z/2)+g) J0 - sum_{m>=1} H_m u_m];
// Y1 = (2/pi)(log(z/2)+g) J1 - 2/(pi z) - (z/(2 pi)) sum (H_m+H_{m+1}) v_m.
inline HankelPair hankel01_series(Complex zd) {
  const LComplex z = widen(zd);
  const LComplex q = (z / 2.0L) * (z / 2.0L);
  const long double lgamma_e = 0.577215664901532860606512090082402431L;
  const LComplex lg = std::log(z / 2.0L) + lgamma_e;

  LComplex u(1.0L, 0.0L);        // u_m
  LComplex v(1.0L, 0.0L);        // v_m
  LComplex j0 = u, j1s = v;      // running sums
  LComplex s0(0.0L, 0.0L);       // sum H_m u_m
  LComplex s1 = v;               // sum (H_m + H_{m+1}) v_m, m=0 term = 1
  long double hm = 0.0L;         // H_m
  for (int m = 1; m <= 120; ++m) {
    const long double md = static_cast<long double>(m);
    u *= -q / (md * md);
    v *= -q / (md * (md + 1.0L));
    hm += 1.0L / md;
    const long double hm1 = hm + 1.0L / (md + 1.0L);
    j0 += u;
    j1s += v;
    s0 += hm * u;
    s1 += (hm + hm1) * v;
    if (std::abs(u) < 1e-22L * std::abs(j0) &&
        std::abs(v) < 1e-22L * std::abs(j1s)) {
      break;
    }
  }
  const LComplex half_z = z / 2.0L;
  const LComplex j1 = half_z * j1s;
  const long double two_over_pi =
      0.636619772367581343075535053490057448L;
  const LComplex y0 = two_over_pi * (lg * j0 - s0);
  const LComplex y1 = two_over_pi * (lg * j1) -
                      two_over_pi / z -
                      (half_z / 3.14159265358979323846264338327950288L) * s1;
  const LComplex i_unit(0.0L, 1.0L);
  return {narrow(j0 + i_unit * y0), narrow(j1 + i_unit * y1)};
}

// Asymptotic expansion: H_v(z) ~ sqrt(2/(pi z)) e^{i(z - v pi/2 - pi/4)} P_v,
// P_v = sum_k i^k a_k(v) / z^k, a_{k+1}/a_k = (4v^2-(2k+1)^2)/(8(k+1)).
// The series is divergent; summation stops at the smallest term. Runs in
// double: no cancellation occurs here and the truncation floor (~4e-11 at
// |z| = 12, vanishing for larger |z|) is precision-independent. This is the
// hot path of matrix assembly, so the stop test uses the cheap L1 magnitude.
inline Complex hankel_asym_tail(int nu, Complex inv_z) {
  Complex term(1.0, 0.0);
  Complex sum = term;
  double prev_mag = 1.0;
  const Complex i_unit(0.0, 1.0);
  const double fourv2 = 4.0 * nu * nu;
  for (int k = 0; k < 40; ++k) {
    const double tk = 2.0 * k + 1.0;
    const double ratio = (fourv2 - tk * tk) / (8.0 * (k + 1.0));
    term *= i_unit * ratio * inv_z;
    const double mag = std::abs(term.real()) + std::abs(term.imag());
    if (k > 2 && mag >= prev_mag) break;  // past the smallest term
    sum += term;
    prev_mag = mag;
    if (mag < 1e-17 * (std::abs(sum.real()) + std::abs(sum.imag()))) break;
  }
  return sum;
}

inline HankelPair hankel01_asymptotic(Complex z) {
  const Complex inv_z = 1.0 / z;
  const Complex i_unit(0.0, 1.0);
  // sqrt(2/(pi z)) and e^{i(z - pi/4)} shared by both orders.
  const Complex pref =
      std::sqrt(2.0 / (pi * z)) * std::exp(i_unit * (z - pi / 4.0));
  const Complex p0 = hankel_asym_tail(0, inv_z);
  const Complex p1 = hankel_asym_tail(1, inv_z);
  return {pref * p0, -i_unit * pref * p1};
}

inline constexpr double hankel_series_crossover = 12.0;

}  // namespace detail

// H0^(1)(z) and H1^(1)(z) in one call (assembly loops need both and the two
// orders share all the expensive pieces). z = 0 is a true singularity.
inline HankelPair hankel01(Complex z) {
  if (z == Complex(0.0, 0.0)) {
    throw std::domain_error("hankel01: argument must be nonzero");
  }
  if (std::abs(z) < detail::hankel_series_crossover) {
    return detail::hankel01_series(z);
  }
  return detail::hankel01_asymptotic(z);
}

// Single-order convenience wrapper; order must be 0 or 1.
inline Complex hankel1(int order, Complex z) {
  if (order != 0 && order != 1) {
    throw std::invalid_argument("hankel1: order must be 0 or 1");
  }
  const HankelPair h = hankel01(z);
  return order == 0 ? h.h0 : h.h1;
}

// Dense LU solve with partial pivoting. Rejects systems that are singular to
// working precision instead of returning garbage.
inline ComplexVector lu_solve(const ComplexMatrix& a, const ComplexVector& b) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("lu_solve: matrix must be square");
  }
  if (a.rows() != b.size()) {
    throw std::invalid_argument("lu_solve: dimension mismatch");
  }
  if (a.rows() == 0) {
    throw std::invalid_argument("lu_solve: empty system");
  }
  Eigen::PartialPivLU<ComplexMatrix> lu(a);
  const auto diag = lu.matrixLU().diagonal();
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double m = std::abs(diag[i]);
    dmin = std::min(dmin, m);
    dmax = std::max(dmax, m);
  }
  const double n = static_cast<double>(a.rows());
  if (dmax == 0.0 || dmin <= dmax * n * 8.0 * std::numeric_limits<double>::epsilon()) {
    throw std::runtime_error("lu_solve: matrix is singular to working precision");
  }
  return lu.solve(b);
}

// Solve (C^H C + tau I) d = C^H r. The system matrix is Hermitian positive
// definite for tau > 0, so a Cholesky factorization is used.
inline ComplexVector regularized_normal_solve(const ComplexMatrix& c,
                                              const ComplexVector& r,
                                              double tau) {
  if (c.rows() != r.size()) {
    throw std::invalid_argument("regularized_normal_solve: dimension mismatch");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("regularized_normal_solve: tau must be positive");
  }
  ComplexMatrix normal = c.adjoint() * c;
  normal.diagonal().array() += Complex(tau, 0.0);
  const ComplexVector rhs = c.adjoint() * r;
  Eigen::LLT<ComplexMatrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("regularized_normal_solve: factorization failed");
  }
  return llt.solve(rhs);
}

// Deterministic stream: mt19937_64 with fixed output transforms, so equal
// seeds give bit-identical sequences on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  // Uniform on [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(state_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on two consecutive uniforms (no caching:
  // draw count stays predictable).
  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * pi * u2);
  }

 private:
  std::mt19937_64 state_;
};

// Stream splitting for sweep points: splitmix64 mix of (master, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t x = master + 0x9E3779B97F4A7C15ull * (index + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

}  // namespace surfscat::numerics
