// Surface reconstruction: regularized Newton iterations on the spline
// coefficients, marched over an increasing frequency schedule with warm
// starts.
//
// The Frechet derivative of the receiver field with respect to a local
// height perturbation keeps the boundary data (u, v) and the slope factors
// frozen; only the kernels' dependence on the source height varies:
//   dG/ds = (i k/4) H1(k R) (y - y')/R
//   dK/ds = (i k/(4 nu)) [ -k H0 dy B / R^2 + 2 H1 dy B / R^3 - H1 / R ]
// with dy = y - y', B = dy - s'(x)(x - x'), nu = sqrt(1 + s'^2).
//
// Each Newton step solves (C^H C + tau I) d = C^H (u_mea - u_sca) and takes
// the real part of d; the discarded imaginary norm is recorded as a model
// consistency diagnostic.

#pragma once

#include <surfscat/forward.hpp>
#include <surfscat/numerics.hpp>
#include <surfscat/surface.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfscat::inverse {

using forward::ForwardSolution;
using forward::IncidentWave;
using forward::Medium;
using forward::ReceiverArray;
using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::ComplexVector;

inline Complex green_G_height_partial(Complex k, double xo, double yo,
                                      double xs, double ys) {
  const double dx = xo - xs;
  const double dy = yo - ys;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) {
    throw std::invalid_argument("green_G_height_partial: coincident points");
  }
  return Complex(0.0, 0.25) * k * numerics::hankel01(k * r).h1 * (dy / r);
}

inline Complex green_K_height_partial(Complex k, double xo, double yo,
                                      double xs, double ys, double slope) {
  const double dx = xo - xs;
  const double dy = yo - ys;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) {
    throw std::invalid_argument("green_K_height_partial: coincident points");
  }
  const double nu = std::sqrt(1.0 + slope * slope);
  const double b = dy - slope * dx;
  const auto h = numerics::hankel01(k * r);
  const Complex bracket = -k * h.h0 * dy * b / (r * r) +
                          2.0 * h.h1 * dy * b / (r * r * r) - h.h1 / r;
  return Complex(0.0, 0.25) * k * bracket / nu;
}

// Receiver-by-coefficient Jacobian of the scattered field with respect to the
// spline coefficients: trapezoid quadrature (half-weight end segments) of
// [dK/ds u - dG/ds v] phi_q over the current mesh.
inline ComplexMatrix frechet_matrix(const ForwardSolution& sol,
                                    const ReceiverArray& recv,
                                    const surface::SplineBasis& basis,
                                    Complex k1) {
  const int n = sol.surf.count();
  const int nr = static_cast<int>(recv.x.size());
  if (nr == 0) throw std::invalid_argument("frechet_matrix: no receivers");
  if (sol.u.size() != n || sol.v.size() != n) {
    throw std::invalid_argument("frechet_matrix: inconsistent solution");
  }
  ComplexMatrix c = ComplexMatrix::Zero(nr, basis.count);
  std::vector<double> phi(static_cast<std::size_t>(basis.count));
  for (int i = 0; i < n; ++i) {
    const double tw = (i == 0 || i == n - 1) ? 0.5 * sol.surf.weights[i]
                                             : sol.surf.weights[i];
    int qlo = basis.count, qhi = -1;
    for (int q = 0; q < basis.count; ++q) {
      phi[static_cast<std::size_t>(q)] = basis.value(q, sol.surf.x[i]);
      if (phi[static_cast<std::size_t>(q)] != 0.0) {
        qlo = std::min(qlo, q);
        qhi = std::max(qhi, q);
      }
    }
    if (qhi < qlo) continue;  // midpoint outside every basis support
    for (int j = 0; j < nr; ++j) {
      const Complex dk = green_K_height_partial(k1, recv.x[j], recv.height,
                                                sol.surf.x[i], sol.surf.heights[i],
                                                sol.surf.slopes[i]);
      const Complex dg = green_G_height_partial(k1, recv.x[j], recv.height,
                                                sol.surf.x[i], sol.surf.heights[i]);
      const Complex density = (dk * sol.u[i] - dg * sol.v[i]) * tw;
      for (int q = qlo; q <= qhi; ++q) {
        c(j, q) += density * phi[static_cast<std::size_t>(q)];
      }
    }
  }
  if (!c.allFinite()) throw std::runtime_error("frechet_matrix: non-finite entries");
  return c;
}

// Regularized Gauss-Newton coefficient update. The imaginary part of the
// complex solve is discarded; its relative norm is reported through
// *imag_ratio (0 for a zero step).
inline Eigen::VectorXd newton_step(const ComplexMatrix& c,
                                   const ComplexVector& mismatch, double tau,
                                   double* imag_ratio = nullptr) {
  const ComplexVector d = numerics::regularized_normal_solve(c, mismatch, tau);
  const double norm = d.norm();
  if (imag_ratio != nullptr) {
    *imag_ratio = norm > 0.0 ? d.imag().norm() / norm : 0.0;
  }
  return d.real();
}

struct InverseConfig {
  double tau = 0.75e-5;             // Tikhonov weight
  double step_threshold = 5e-3;     // ||d||_2 stop (m)
  int max_iterations = 30;          // per frequency
  int spline_count = 25;
  int spline_order = 3;
  double points_per_wavelength = 10.0;  // mesh rule w = 2 pi/(ppw |k2|)

  void validate() const {
    if (!(tau > 0.0) || !(tau < 1.0)) {
      throw std::invalid_argument("InverseConfig: tau must lie in (0, 1)");
    }
    if (!(step_threshold > 0.0)) {
      throw std::invalid_argument("InverseConfig: step_threshold must be positive");
    }
    if (max_iterations < 1) {
      throw std::invalid_argument("InverseConfig: max_iterations must be >= 1");
    }
    if (spline_count < 1 || spline_order < 1 || spline_order > 5) {
      throw std::invalid_argument("InverseConfig: invalid spline basis");
    }
    if (!(points_per_wavelength >= 2.0)) {
      throw std::invalid_argument("InverseConfig: points_per_wavelength must be >= 2");
    }
  }
};

struct ScatteringScene {
  Medium upper;  // lossless
  Medium lower;
  IncidentWave wave;
  ReceiverArray receivers;
};

struct IterationRecord {
  int iteration = 0;          // 1-based
  double step_norm = 0.0;
  double mismatch_norm = 0.0;
  double imag_ratio = 0.0;
  double err = std::numeric_limits<double>::quiet_NaN();
};

struct FrequencyRecord {
  double frequency = 0.0;
  int mesh_count = 0;
  int iterations = 0;
  bool converged = false;
  double final_step_norm = 0.0;
  double err = std::numeric_limits<double>::quiet_NaN();
  std::vector<IterationRecord> steps;
};

namespace detail {

// Relative profile error on a grid; NaN when the reference power vanishes.
inline double relative_error_or_nan(const std::vector<double>& rec,
                                    const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    num += (rec[i] - ref[i]) * (rec[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(num / den);
}

}  // namespace detail

// Newton iterations at one frequency, updating `model` in place. The mesh is
// rebuilt from the current spline surface every iteration. Returns the
// per-frequency record; `reference` (optional) adds err tracking.
inline FrequencyRecord newton_at_frequency(surface::SurfaceModel& model,
                                           double frequency,
                                           const ComplexVector& measured,
                                           const ScatteringScene& scene,
                                           const InverseConfig& config,
                                           const surface::GriddedSurface* reference = nullptr) {
  config.validate();
  if (measured.size() != static_cast<Eigen::Index>(scene.receivers.x.size())) {
    throw std::invalid_argument("newton_at_frequency: measurement/receiver size mismatch");
  }
  if (!measured.allFinite()) {
    throw std::runtime_error("newton_at_frequency: non-finite measurements");
  }
  const Complex k1 = forward::wavenumber(scene.upper, frequency);
  const Complex k2 = forward::wavenumber(scene.lower, frequency);
  const double width = 2.0 * numerics::pi /
                       (config.points_per_wavelength * std::abs(k2));

  FrequencyRecord rec;
  rec.frequency = frequency;

  for (int it = 1; it <= config.max_iterations; ++it) {
    const auto mesh = sample_surface(model, width);
    rec.mesh_count = mesh.count();
    const auto sol = forward::solve_forward(mesh, k1, k2, scene.wave, frequency);
    const ComplexVector u_sca = forward::scattered_field(sol, scene.receivers, k1);
    const ComplexMatrix c = frechet_matrix(sol, scene.receivers, model.basis, k1);

    IterationRecord step;
    step.iteration = it;
    const ComplexVector mismatch = measured - u_sca;
    step.mismatch_norm = mismatch.norm();
    const Eigen::VectorXd d =
        newton_step(c, mismatch, config.tau, &step.imag_ratio);
    model.coeffs += d;
    step.step_norm = d.norm();

    if (reference != nullptr) {
      std::vector<double> recv(mesh.x.size()), refv(mesh.x.size());
      for (std::size_t i = 0; i < mesh.x.size(); ++i) {
        recv[i] = model.eval(mesh.x[i]);
        refv[i] = reference->eval(mesh.x[i]);
      }
      step.err = detail::relative_error_or_nan(recv, refv);
    }

    rec.steps.push_back(step);
    rec.iterations = it;
    rec.final_step_norm = step.step_norm;
    rec.err = step.err;
    if (step.step_norm <= config.step_threshold) {
      rec.converged = true;
      break;
    }
  }
  return rec;
}

struct FrequencySchedule {
  double start = 0.0;  // Hz
  double step = 0.0;   // Hz
  double stop = 0.0;   // Hz

  std::vector<double> frequencies() const {
    if (!(start > 0.0) || !(stop >= start) || !(step > 0.0)) {
      throw std::invalid_argument("FrequencySchedule: need 0 < start <= stop, step > 0");
    }
    std::vector<double> f;
    for (double v = start; v <= stop * (1.0 + 1e-12); v += step) f.push_back(v);
    return f;
  }
};

struct ReconstructionResult {
  surface::SurfaceModel model;
  std::vector<FrequencyRecord> frequencies;
  bool aborted = false;
  std::string abort_reason;
};

// Frequency marching: ascending frequencies, flat start (or caller-provided
// initial coefficients), each frequency warm-started from the previous
// result. A failure mid-march keeps the records accumulated so far.
inline ReconstructionResult multi_frequency_reconstruct(
    const std::vector<double>& freqs,
    const std::vector<ComplexVector>& measurements,
    const ScatteringScene& scene, const InverseConfig& config,
    double domain_length,
    const surface::GriddedSurface* reference = nullptr,
    const Eigen::VectorXd* initial = nullptr) {
  config.validate();
  if (freqs.empty() || !(freqs.front() > 0.0) ||
      !std::is_sorted(freqs.begin(), freqs.end())) {
    throw std::invalid_argument(
        "multi_frequency_reconstruct: frequencies must be positive and ascending");
  }
  if (measurements.size() != freqs.size()) {
    throw std::invalid_argument(
        "multi_frequency_reconstruct: one measurement vector per frequency required");
  }

  ReconstructionResult out;
  out.model = surface::SurfaceModel::zero(
      surface::SplineBasis::make(config.spline_count, config.spline_order, domain_length));
  if (initial != nullptr) {
    if (initial->size() != out.model.coeffs.size()) {
      throw std::invalid_argument("multi_frequency_reconstruct: initial size mismatch");
    }
    out.model.coeffs = *initial;
  }

  for (std::size_t m = 0; m < freqs.size(); ++m) {
    try {
      out.frequencies.push_back(newton_at_frequency(
          out.model, freqs[m], measurements[m], scene, config, reference));
    } catch (const std::exception& e) {
      out.aborted = true;
      out.abort_reason = "frequency index " + std::to_string(m) + " (" +
                         std::to_string(freqs[m] / 1e6) + " MHz): " + e.what();
      break;
    }
  }
  return out;
}

inline ReconstructionResult multi_frequency_reconstruct(
    const FrequencySchedule& schedule,
    const std::vector<ComplexVector>& measurements,
    const ScatteringScene& scene, const InverseConfig& config,
    double domain_length,
    const surface::GriddedSurface* reference = nullptr,
    const Eigen::VectorXd* initial = nullptr) {
  return multi_frequency_reconstruct(schedule.frequencies(), measurements, scene,
                                     config, domain_length, reference, initial);
}

}  // namespace surfscat::inverse
