#include <catch2/catch_amalgamated.hpp>

#include <surfscat/inverse.hpp>

#include <cmath>
#include <complex>
#include <vector>

using namespace surfscat::inverse;
using surfscat::numerics::Complex;
using surfscat::numerics::ComplexMatrix;
using surfscat::numerics::ComplexVector;
using surfscat::numerics::SeededRng;
using surfscat::surface::SplineBasis;
using surfscat::surface::SurfaceModel;

namespace {

constexpr double kPi = surfscat::numerics::pi;

ScatteringScene make_scene(double dx_recv = 0.2) {
  ScatteringScene sc;
  sc.upper = {1.0, 1.0, 0.0};
  sc.lower = {4.0, 1.0, 1e-5};
  sc.wave = {0.0, 8.0};
  sc.receivers = ReceiverArray::uniform(-10.0, 10.0, dx_recv, 4.25);
  return sc;
}

}  // namespace

TEST_CASE("height partial of G matches finite differences") {
  const Complex k(6.3, 0.0);
  SeededRng rng(404);
  int checked = 0;
  while (checked < 60) {
    const double xo = 6.0 * (rng.uniform() - 0.5), yo = 3.0 + 2.0 * rng.uniform();
    const double xs = 6.0 * (rng.uniform() - 0.5), ys = 0.2 * rng.gaussian();
    if (std::hypot(xo - xs, yo - ys) < 0.5) continue;
    ++checked;
    const double e = 1e-7;
    const Complex fd = (surfscat::forward::green_G(k, xo, yo, xs, ys + e) -
                        surfscat::forward::green_G(k, xo, yo, xs, ys - e)) /
                       (2.0 * e);
    const Complex got = green_G_height_partial(k, xo, yo, xs, ys);
    CAPTURE(xo, yo, xs, ys);
    REQUIRE(std::abs(got - fd) <= 1e-5 * std::abs(fd));
  }
}

TEST_CASE("height partial of K matches finite differences") {
  // The slope argument stays frozen while the height moves.
  const Complex k(6.3, 0.0);
  SeededRng rng(505);
  int checked = 0;
  while (checked < 60) {
    const double xo = 6.0 * (rng.uniform() - 0.5), yo = 3.0 + 2.0 * rng.uniform();
    const double xs = 6.0 * (rng.uniform() - 0.5), ys = 0.2 * rng.gaussian();
    const double slope = 1.6 * (rng.uniform() - 0.5);
    if (std::hypot(xo - xs, yo - ys) < 0.5) continue;
    ++checked;
    const double e = 1e-7;
    const Complex fd = (surfscat::forward::green_K(k, xo, yo, xs, ys + e, slope) -
                        surfscat::forward::green_K(k, xo, yo, xs, ys - e, slope)) /
                       (2.0 * e);
    const Complex got = green_K_height_partial(k, xo, yo, xs, ys, slope);
    CAPTURE(xo, yo, xs, ys, slope);
    REQUIRE(std::abs(got - fd) <= 1e-4 * std::abs(fd));
  }
}

TEST_CASE("finite-difference error decays quadratically") {
  const Complex k(5.0, 0.0);
  const double xo = 1.3, yo = 4.0, xs = -0.7, ys = 0.05, slope = 0.4;

  auto fd_err_G = [&](double e) {
    const Complex fd = (surfscat::forward::green_G(k, xo, yo, xs, ys + e) -
                        surfscat::forward::green_G(k, xo, yo, xs, ys - e)) /
                       (2.0 * e);
    return std::abs(fd - green_G_height_partial(k, xo, yo, xs, ys));
  };
  auto fd_err_K = [&](double e) {
    const Complex fd = (surfscat::forward::green_K(k, xo, yo, xs, ys + e, slope) -
                        surfscat::forward::green_K(k, xo, yo, xs, ys - e, slope)) /
                       (2.0 * e);
    return std::abs(fd - green_K_height_partial(k, xo, yo, xs, ys, slope));
  };

  const double rg = fd_err_G(1e-3) / fd_err_G(1e-4);
  const double rk = fd_err_K(1e-3) / fd_err_K(1e-4);
  CAPTURE(rg, rk);
  CHECK(rg > 30.0);
  CHECK(rg < 300.0);
  CHECK(rk > 30.0);
  CHECK(rk < 300.0);
}

TEST_CASE("frechet matrix matches explicit assembly") {
  const Complex k1(4.0, 0.0);
  ForwardSolution sol;
  sol.frequency = 2e8;
  sol.surf = sample_surface(SurfaceModel::zero(SplineBasis::make(4, 3, 3.0)), 0.5);
  const int n = sol.surf.count();
  REQUIRE(n == 6);
  SeededRng rng(606);
  sol.u = ComplexVector(n);
  sol.v = ComplexVector(n);
  for (int i = 0; i < n; ++i) {
    sol.u[i] = Complex(rng.gaussian(), rng.gaussian());
    sol.v[i] = Complex(rng.gaussian(), rng.gaussian());
  }
  const auto recv = ReceiverArray::uniform(-1.0, 1.0, 1.0, 2.0);
  const auto basis = SplineBasis::make(4, 3, 3.0);

  const ComplexMatrix c = frechet_matrix(sol, recv, basis, k1);
  REQUIRE(c.rows() == 3);
  REQUIRE(c.cols() == 4);

  for (int j = 0; j < 3; ++j) {
    for (int q = 0; q < 4; ++q) {
      Complex want(0.0, 0.0);
      for (int i = 0; i < n; ++i) {
        const double tw =
            (i == 0 || i == n - 1) ? 0.5 * sol.surf.weights[i] : sol.surf.weights[i];
        const Complex dk = green_K_height_partial(
            k1, recv.x[j], recv.height, sol.surf.x[i], sol.surf.heights[i],
            sol.surf.slopes[i]);
        const Complex dg = green_G_height_partial(
            k1, recv.x[j], recv.height, sol.surf.x[i], sol.surf.heights[i]);
        want += (dk * sol.u[i] - dg * sol.v[i]) * tw * basis.value(q, sol.surf.x[i]);
      }
      CAPTURE(j, q);
      REQUIRE(std::abs(c(j, q) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }

  // Dark surface radiates no sensitivity.
  sol.u.setZero();
  sol.v.setZero();
  CHECK(frechet_matrix(sol, recv, basis, k1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("newton_step structure") {
  SeededRng rng(707);
  ComplexMatrix c(9, 4);
  ComplexVector r(9);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 4; ++j) c(i, j) = Complex(rng.gaussian(), rng.gaussian());
    r[i] = Complex(rng.gaussian(), rng.gaussian());
  }

  double ratio = -1.0;
  const Eigen::VectorXd d = newton_step(c, r, 1e-3, &ratio);
  const ComplexVector full = surfscat::numerics::regularized_normal_solve(c, r, 1e-3);
  CHECK((d - Eigen::VectorXd(full.real())).norm() == 0.0);
  CHECK(ratio == Catch::Approx(full.imag().norm() / full.norm()));

  // Zero mismatch: zero step, zero imaginary ratio.
  const Eigen::VectorXd z = newton_step(c, ComplexVector::Zero(9), 1e-3, &ratio);
  CHECK(z.norm() == 0.0);
  CHECK(ratio == 0.0);

  // Stronger regularization shrinks the step.
  const double n_small = newton_step(c, r, 1e-4).norm();
  const double n_big = newton_step(c, r, 10.0).norm();
  CHECK(n_big < n_small);
}

TEST_CASE("config validation") {
  InverseConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.tau = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.points_per_wavelength = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.step_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("consistent measurements are a fixed point of the iteration") {
  const auto scene = make_scene();
  InverseConfig cfg;
  cfg.spline_count = 12;
  const double f = 300e6;

  // Measurements synthesized from the flat start itself.
  const Complex k1 = surfscat::forward::wavenumber(scene.upper, f);
  const Complex k2 = surfscat::forward::wavenumber(scene.lower, f);
  const double w = 2.0 * kPi / (cfg.points_per_wavelength * std::abs(k2));
  auto flat = SurfaceModel::zero(SplineBasis::make(cfg.spline_count, 3, 16.0));
  const auto sol = surfscat::forward::solve_forward(sample_surface(flat, w), k1,
                                                    k2, scene.wave, f);
  const ComplexVector mea = surfscat::forward::scattered_field(sol, scene.receivers, k1);

  auto model = SurfaceModel::zero(SplineBasis::make(cfg.spline_count, 3, 16.0));
  const auto rec = newton_at_frequency(model, f, mea, scene, cfg);
  CHECK(rec.iterations == 1);
  CHECK(rec.converged);
  CHECK(rec.final_step_norm <= cfg.step_threshold);
  CHECK(model.coeffs.norm() < 1e-9);
  CHECK(rec.steps.front().imag_ratio < 1e-6);
  CHECK(rec.mesh_count == 320);
}

TEST_CASE("single-frequency iterations reduce the profile error") {
  const auto scene = make_scene();
  InverseConfig cfg;
  cfg.spline_count = 12;
  cfg.max_iterations = 6;
  const double f = 400e6;

  auto truth = SurfaceModel::zero(SplineBasis::make(cfg.spline_count, 3, 16.0));
  SeededRng rng(808);
  for (int i = 0; i < truth.coeffs.size(); ++i) truth.coeffs[i] = 0.02 * rng.gaussian();
  const auto ref = surfscat::surface::rasterize(
      [&](double x) { return truth.eval(x); }, 16.0, 1024);

  const Complex k1 = surfscat::forward::wavenumber(scene.upper, f);
  const Complex k2 = surfscat::forward::wavenumber(scene.lower, f);
  const double w = 2.0 * kPi / (cfg.points_per_wavelength * std::abs(k2));
  const auto sol = surfscat::forward::solve_forward(sample_surface(truth, w), k1,
                                                    k2, scene.wave, f);
  const ComplexVector mea = surfscat::forward::scattered_field(sol, scene.receivers, k1);

  auto model = SurfaceModel::zero(truth.basis);
  const auto rec = newton_at_frequency(model, f, mea, scene, cfg, &ref);

  // The mismatch and the profile error both drop over the first iterations.
  // Full steps creep once the stiff modes start alternating, so the pinned
  // bound reflects what this configuration reaches by iteration 6 (measured
  // 0.70 from a flat start at 1.0), not exact recovery.
  REQUIRE(rec.steps.size() >= 3);
  CHECK(rec.steps[1].mismatch_norm < rec.steps[0].mismatch_norm);
  CHECK(rec.steps[1].err < rec.steps[0].err);
  CHECK(rec.steps[2].err < rec.steps[1].err);
  CAPTURE(rec.err, rec.iterations, rec.final_step_norm);
  CHECK(rec.err < 0.8);
  for (const auto& s : rec.steps) {
    CHECK(s.imag_ratio >= 0.0);
    CHECK(s.imag_ratio < 1.0);
  }
}

TEST_CASE("frequency schedule expansion") {
  FrequencySchedule s{300e6, 50e6, 400e6};
  const auto f = s.frequencies();
  REQUIRE(f.size() == 3);
  CHECK(f[0] == 300e6);
  CHECK(f[1] == 350e6);
  CHECK(f[2] == 400e6);

  // Truncation below an off-grid stop; single-frequency degenerate case.
  CHECK(FrequencySchedule{300e6, 40e6, 410e6}.frequencies().size() == 3);
  CHECK(FrequencySchedule{300e6, 1e6, 300e6}.frequencies().size() == 1);

  CHECK_THROWS_AS((FrequencySchedule{0.0, 1e6, 1e9}.frequencies()),
                  std::invalid_argument);
  CHECK_THROWS_AS((FrequencySchedule{1e9, 0.0, 2e9}.frequencies()),
                  std::invalid_argument);
  CHECK_THROWS_AS((FrequencySchedule{2e9, 1e6, 1e9}.frequencies()),
                  std::invalid_argument);
}

TEST_CASE("march over one frequency equals the direct iteration") {
  const auto scene = make_scene(0.5);
  InverseConfig cfg;
  cfg.spline_count = 10;
  cfg.max_iterations = 3;
  const double f = 250e6;

  auto truth = SurfaceModel::zero(SplineBasis::make(cfg.spline_count, 3, 16.0));
  truth.coeffs.setConstant(0.03);
  const Complex k1 = surfscat::forward::wavenumber(scene.upper, f);
  const Complex k2 = surfscat::forward::wavenumber(scene.lower, f);
  const double w = 2.0 * kPi / (cfg.points_per_wavelength * std::abs(k2));
  const auto sol = surfscat::forward::solve_forward(sample_surface(truth, w), k1,
                                                    k2, scene.wave, f);
  const ComplexVector mea = surfscat::forward::scattered_field(sol, scene.receivers, k1);

  const auto result = multi_frequency_reconstruct(
      FrequencySchedule{f, 1e6, f}, {mea}, scene, cfg, 16.0);
  REQUIRE(!result.aborted);
  REQUIRE(result.frequencies.size() == 1);

  auto model = SurfaceModel::zero(SplineBasis::make(cfg.spline_count, 3, 16.0));
  const auto rec = newton_at_frequency(model, f, mea, scene, cfg);
  CHECK((result.model.coeffs - model.coeffs).norm() == 0.0);
  CHECK(result.frequencies.front().iterations == rec.iterations);
  CHECK(result.frequencies.front().final_step_norm == rec.final_step_norm);
}

TEST_CASE("march validates and preserves partial results on failure") {
  const auto scene = make_scene(0.5);
  InverseConfig cfg;
  cfg.spline_count = 10;
  cfg.max_iterations = 1;

  const FrequencySchedule sched{250e6, 50e6, 300e6};
  const int nr = static_cast<int>(scene.receivers.x.size());

  CHECK_THROWS_AS(multi_frequency_reconstruct(
                      sched, {ComplexVector::Zero(nr)}, scene, cfg, 16.0),
                  std::invalid_argument);

  // Second frequency carries a poisoned measurement: the march stops there
  // and keeps the first frequency's record.
  std::vector<ComplexVector> mea(2, ComplexVector::Zero(nr));
  mea[1][0] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  const auto result = multi_frequency_reconstruct(sched, mea, scene, cfg, 16.0);
  CHECK(result.aborted);
  REQUIRE(result.frequencies.size() == 1);
  CHECK(result.frequencies.front().frequency == 250e6);
  CHECK(result.abort_reason.find("frequency index 1") != std::string::npos);
}
