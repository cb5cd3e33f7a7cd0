// Synthetic measurement generation, the reconstruction error metric, and
// the canned scenario driver (sweeps over frequency step, noise level, or
// receiver spacing).
//
// Noise model: each receiver sample gains a fixed-magnitude perturbation
//   u_mea_j = u_ref_j + |u_ref_j| A_n exp(i 2 pi P),  P ~ U[0,1),
// one independent phase draw per (frequency, receiver). Phase streams are
// derived per frequency index so sweep points and frequencies can be
// evaluated in any order without changing results.
//
// Measurement synthesis runs the forward solver on a mesh mesh_factor times
// finer than the inversion mesh (default 2) so the inverse iteration never
// sees its own discretization. mesh_factor 1 reproduces the committed-crime
// setup where measured and modeled fields share a mesh.

#pragma once

#include <surfscat/forward.hpp>
#include <surfscat/inverse.hpp>
#include <surfscat/numerics.hpp>
#include <surfscat/surface.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace surfscat::experiments {

using numerics::Complex;
using numerics::ComplexVector;

struct MeasurementSet {
  forward::ReceiverArray receivers;
  std::vector<double> frequencies;       // Hz, ascending
  std::vector<ComplexVector> fields;     // one vector of length N^r per frequency
  double noise_level = 0.0;              // A_n
  std::uint64_t noise_seed = 0;
  int mesh_factor = 2;
};

// Forward-solve `ref` per frequency on the refined mesh, sample at the
// receivers, then add the fixed-magnitude random-phase perturbation.
template <class Surface>
MeasurementSet synthesize_measurements(const Surface& ref,
                                       const forward::Medium& upper,
                                       const forward::Medium& lower,
                                       const forward::IncidentWave& wave,
                                       const forward::ReceiverArray& receivers,
                                       const std::vector<double>& frequencies,
                                       double noise_level, std::uint64_t seed,
                                       int mesh_factor = 2,
                                       double points_per_wavelength = 10.0) {
  if (noise_level < 0.0) {
    throw std::invalid_argument("synthesize_measurements: negative noise level");
  }
  if (mesh_factor < 1) {
    throw std::invalid_argument("synthesize_measurements: mesh factor must be >= 1");
  }
  MeasurementSet set;
  set.receivers = receivers;
  set.frequencies = frequencies;
  set.noise_level = noise_level;
  set.noise_seed = seed;
  set.mesh_factor = mesh_factor;
  set.fields.reserve(frequencies.size());

  for (std::size_t m = 0; m < frequencies.size(); ++m) {
    const double f = frequencies[m];
    const Complex k1 = forward::wavenumber(upper, f);
    const Complex k2 = forward::wavenumber(lower, f);
    const double width =
        2.0 * numerics::pi /
        (points_per_wavelength * mesh_factor * std::abs(k2));
    const surface::SampledSurface mesh = surface::sample_surface(ref, width);
    const forward::ForwardSolution sol =
        forward::solve_forward(mesh, k1, k2, wave, f);
    ComplexVector u = forward::scattered_field(sol, receivers, k1);

    if (noise_level > 0.0) {
      numerics::SeededRng rng(
          numerics::derive_seed(seed, static_cast<std::uint64_t>(m)));
      for (Eigen::Index j = 0; j < u.size(); ++j) {
        const double phase = 2.0 * numerics::pi * rng.uniform();
        u[j] += std::abs(u[j]) * noise_level *
                Complex(std::cos(phase), std::sin(phase));
      }
    }
    set.fields.push_back(std::move(u));
  }
  return set;
}

// err = sqrt( sum (rec - ref)^2 / sum ref^2 ) over the supplied grid.
inline double reconstruction_error(const std::vector<double>& rec,
                                   const std::vector<double>& ref) {
  if (rec.size() != ref.size() || rec.empty()) {
    throw std::invalid_argument("reconstruction_error: grid size mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    num += (rec[i] - ref[i]) * (rec[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  if (!(den > 0.0)) {
    throw std::invalid_argument("reconstruction_error: reference is identically zero");
  }
  return std::sqrt(num / den);
}

template <class Rec, class Ref>
double reconstruction_error(const Rec& rec, const Ref& ref,
                            const std::vector<double>& grid) {
  std::vector<double> a(grid.size()), b(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    a[i] = rec.eval(grid[i]);
    b[i] = ref.eval(grid[i]);
  }
  return reconstruction_error(a, b);
}

// One reference profile per scenario: random roughness, the piecewise
// triangular test profile, or explicit spline coefficients.
struct RandomSurfaceSpec {
  surface::RandomSurfaceParams params;
  std::uint64_t seed = 1;
};
struct TriangularSurfaceSpec {
  double domain_length = 16.0;
  int grid_count = 2048;
};
struct CoefficientSurfaceSpec {
  std::vector<double> coeffs;  // interpreted in the scenario's spline basis
  double domain_length = 16.0;
  int grid_count = 2048;
};
using SurfaceSpec =
    std::variant<RandomSurfaceSpec, TriangularSurfaceSpec, CoefficientSurfaceSpec>;

inline surface::GriddedSurface realize_surface(const SurfaceSpec& spec,
                                               const inverse::InverseConfig& inv) {
  if (const auto* r = std::get_if<RandomSurfaceSpec>(&spec)) {
    return surface::generate_gaussian_surface(r->params, r->seed);
  }
  if (const auto* t = std::get_if<TriangularSurfaceSpec>(&spec)) {
    return surface::rasterize(surface::triangular_profile, t->domain_length,
                              t->grid_count);
  }
  const auto& c = std::get<CoefficientSurfaceSpec>(spec);
  surface::SplineBasis basis = surface::SplineBasis::make(
      inv.spline_count, inv.spline_order, c.domain_length);
  if (static_cast<int>(c.coeffs.size()) != basis.count) {
    throw std::invalid_argument("realize_surface: coefficient count != spline count");
  }
  surface::SurfaceModel model{basis, Eigen::Map<const Eigen::VectorXd>(
                                         c.coeffs.data(),
                                         static_cast<Eigen::Index>(c.coeffs.size()))};
  return surface::rasterize([&](double x) { return model.eval(x); },
                            c.domain_length, c.grid_count);
}

inline double surface_domain_length(const SurfaceSpec& spec) {
  if (const auto* r = std::get_if<RandomSurfaceSpec>(&spec)) {
    return r->params.domain_length;
  }
  if (const auto* t = std::get_if<TriangularSurfaceSpec>(&spec)) {
    return t->domain_length;
  }
  return std::get<CoefficientSurfaceSpec>(spec).domain_length;
}

enum class SweepAxis { none, frequency_step, noise_level, receiver_spacing };

struct ReceiverSpec {
  double x_start = -10.0;
  double x_end = 10.0;
  double spacing = 0.1;     // m
  double height = 4.25;     // m
  bool include_endpoint = true;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SurfaceSpec surface = RandomSurfaceSpec{};
  forward::Medium upper{1.0, 1.0, 0.0};
  forward::Medium lower{4.0, 1.0, 1e-5};
  forward::IncidentWave wave{0.0, 8.0};
  ReceiverSpec receivers;
  inverse::FrequencySchedule schedule;
  inverse::InverseConfig inverse;
  double noise_level = 0.0;
  std::uint64_t noise_seed = 1;
  int mesh_factor = 2;
  SweepAxis sweep = SweepAxis::none;
  std::vector<double> sweep_values;  // ignored when sweep == none
  int profile_samples = 321;         // dense output grid for plots

  void validate() const {
    inverse.validate();
    if (sweep != SweepAxis::none && sweep_values.empty()) {
      throw std::invalid_argument("ScenarioConfig: sweep axis without values");
    }
    if (sweep == SweepAxis::none && !sweep_values.empty()) {
      throw std::invalid_argument("ScenarioConfig: sweep values without an axis");
    }
    if (noise_level < 0.0) {
      throw std::invalid_argument("ScenarioConfig: negative noise level");
    }
    if (profile_samples < 2) {
      throw std::invalid_argument("ScenarioConfig: need at least 2 profile samples");
    }
  }
};

struct SweepPointReport {
  double axis_value = 0.0;  // Δf (Hz), A_n, or Δx (m); 0 for sweep none
  int receiver_count = 0;
  bool failed = false;
  std::string failure;
  std::vector<inverse::FrequencyRecord> frequencies;
  std::vector<double> final_coeffs;
  std::vector<double> profile_x;    // dense grid
  std::vector<double> profile_ref;  // reference heights on the grid
  std::vector<double> profile_rec;  // reconstruction on the grid
};

struct ScenarioReport {
  std::string name;
  std::vector<SweepPointReport> points;
};

namespace detail {

inline forward::ReceiverArray make_receivers(const ReceiverSpec& r, double spacing) {
  return forward::ReceiverArray::uniform(r.x_start, r.x_end, spacing, r.height,
                                         r.include_endpoint);
}

}  // namespace detail

// Execute one reconstruction per sweep point. Failures are recorded on the
// point and the remaining points still run.
inline ScenarioReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  const double length = surface_domain_length(config.surface);
  const surface::GriddedSurface ref = realize_surface(config.surface, config.inverse);

  const std::size_t n_points =
      config.sweep == SweepAxis::none ? 1 : config.sweep_values.size();

  ScenarioReport report;
  report.name = config.name;
  report.points.reserve(n_points);

  for (std::size_t p = 0; p < n_points; ++p) {
    SweepPointReport point;
    point.axis_value =
        config.sweep == SweepAxis::none ? 0.0 : config.sweep_values[p];

    inverse::FrequencySchedule schedule = config.schedule;
    double noise = config.noise_level;
    double spacing = config.receivers.spacing;
    switch (config.sweep) {
      case SweepAxis::frequency_step: schedule.step = point.axis_value; break;
      case SweepAxis::noise_level: noise = point.axis_value; break;
      case SweepAxis::receiver_spacing: spacing = point.axis_value; break;
      case SweepAxis::none: break;
    }

    try {
      const forward::ReceiverArray recv =
          detail::make_receivers(config.receivers, spacing);
      point.receiver_count = static_cast<int>(recv.x.size());

      const std::vector<double> freqs = schedule.frequencies();
      const MeasurementSet measured = synthesize_measurements(
          ref, config.upper, config.lower, config.wave, recv, freqs, noise,
          numerics::derive_seed(config.noise_seed, static_cast<std::uint64_t>(p)),
          config.mesh_factor, config.inverse.points_per_wavelength);

      const inverse::ScatteringScene scene{config.upper, config.lower,
                                           config.wave, recv};
      inverse::ReconstructionResult result = inverse::multi_frequency_reconstruct(
          schedule, measured.fields, scene, config.inverse, length, &ref);
      if (result.aborted) {
        point.failed = true;
        point.failure = result.abort_reason;
      }
      point.frequencies = std::move(result.frequencies);
      point.final_coeffs.assign(result.model.coeffs.data(),
                                result.model.coeffs.data() +
                                    result.model.coeffs.size());
      point.profile_x.resize(static_cast<std::size_t>(config.profile_samples));
      point.profile_ref.resize(point.profile_x.size());
      point.profile_rec.resize(point.profile_x.size());
      for (std::size_t i = 0; i < point.profile_x.size(); ++i) {
        const double x = -0.5 * length +
                         length * static_cast<double>(i) /
                             static_cast<double>(config.profile_samples - 1);
        point.profile_x[i] = x;
        point.profile_ref[i] = ref.eval(x);
        point.profile_rec[i] = result.model.eval(x);
      }
    } catch (const std::exception& e) {
      point.failed = true;
      point.failure = e.what();
    }
    report.points.push_back(std::move(point));
  }
  return report;
}

}  // namespace surfscat::experiments
