// surfscat: config-driven front end for the scattering library.
//
// Subcommands: gen-surface | forward | reconstruct | experiment | plot.
// Exit codes: 0 success, 1 runtime failure (including partial sweep
// failures; artifacts are kept), 2 usage or config errors.

#include <surfscat/io.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

namespace fs = std::filesystem;
namespace io = surfscat::io;
namespace experiments = surfscat::experiments;

namespace {

// ConfigError and precondition violations are usage problems (2); everything
// else that throws is a runtime failure (1).
int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const io::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const io::OverwriteError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

void print_point_summaries(const experiments::ScenarioReport& report,
                           bool quiet) {
  if (quiet) return;
  for (std::size_t p = 0; p < report.points.size(); ++p) {
    const auto& pt = report.points[p];
    if (pt.failed) {
      std::printf("point %zu: FAILED (%s)\n", p, pt.failure.c_str());
      continue;
    }
    const io::ProfileError err = io::profile_error(pt.profile_rec, pt.profile_ref);
    std::printf("point %zu: %zu frequencies, err %.4g (%s)\n", p,
                pt.frequencies.size(), err.value, err.kind);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D rough-interface scattering: synthesis and reconstruction"};
  app.fallthrough();

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool force = false;
  bool quiet = false;

  auto* opt_config =
      app.add_option("--config", config,
                     "JSON config path (for plot: the report directory)");
  auto* opt_out = app.add_option("--out", out, "output directory");
  auto* opt_seed =
      app.add_option("--seed", seed, "override surface and noise seeds");
  app.add_flag("--force", force, "overwrite existing outputs");
  app.add_flag("--quiet", quiet, "suppress normal progress output");

  auto* cmd_gen =
      app.add_subcommand("gen-surface", "realize a surface; write CSV + stats");
  auto* cmd_fwd =
      app.add_subcommand("forward", "synthesize scattered fields to CSV");
  auto* cmd_rec =
      app.add_subcommand("reconstruct", "invert one measurement set");
  auto* cmd_exp =
      app.add_subcommand("experiment", "run a scenario (sweeps, comparisons)");
  auto* cmd_plot =
      app.add_subcommand("plot", "render SVG charts for a report");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  if (opt_config->count() == 0) {
    std::fprintf(stderr, "error: --config is required\n");
    return 2;
  }
  const fs::path config_path(config);
  const fs::path out_dir(opt_out->count() > 0 ? out : std::string("."));

  const auto load_spec = [&]() {
    io::ExperimentSpec spec = io::load_experiment_file(config_path);
    if (opt_seed->count() > 0) io::apply_seed_override(spec, seed);
    return spec;
  };

  if (*cmd_gen) {
    return run_guarded([&]() {
      const io::ExperimentSpec spec = load_spec();
      io::write_surface_outputs(out_dir, spec, force);
      if (!quiet) std::printf("surface bundle written to %s\n", out_dir.string().c_str());
      return 0;
    });
  }

  if (*cmd_fwd) {
    return run_guarded([&]() {
      const io::ExperimentSpec spec = load_spec();
      io::write_forward_outputs(out_dir, spec, force);
      if (!quiet) std::printf("scattered fields written to %s\n", out_dir.string().c_str());
      return 0;
    });
  }

  if (*cmd_rec) {
    return run_guarded([&]() {
      const io::ExperimentSpec spec = load_spec();
      if (spec.scenario.sweep != experiments::SweepAxis::none) {
        throw io::ConfigError("reconstruct takes no sweep; use the experiment command");
      }
      experiments::ScenarioReport multi;
      std::optional<experiments::ScenarioReport> single;
      if (!spec.measurements.empty()) {
        fs::path mpath(spec.measurements);
        if (mpath.is_relative()) mpath = config_path.parent_path() / mpath;
        const experiments::MeasurementSet set = io::read_measurements(mpath);
        multi = io::run_reconstruct_from_measurements(spec, set);
        if (spec.compare_single) {
          experiments::MeasurementSet top;
          top.receivers = set.receivers;
          top.frequencies = {set.frequencies.back()};
          top.fields = {set.fields.back()};
          single = io::run_reconstruct_from_measurements(spec, top);
        }
      } else {
        const io::ExperimentOutcome outcome = io::run_experiment(spec);
        multi = outcome.multi;
        single = outcome.single;
      }
      io::write_report(out_dir, spec, multi, single ? &*single : nullptr, force);
      print_point_summaries(multi, quiet);
      if (!quiet) std::printf("report written to %s\n", out_dir.string().c_str());
      for (const auto& pt : multi.points) {
        if (pt.failed) return 1;
      }
      if (single) {
        for (const auto& pt : single->points) {
          if (pt.failed) return 1;
        }
      }
      return 0;
    });
  }

  if (*cmd_exp) {
    return run_guarded([&]() {
      const io::ExperimentSpec spec = load_spec();
      if (!spec.measurements.empty()) {
        throw io::ConfigError(
            "a measurements file is a reconstruct input; experiment synthesizes");
      }
      const io::ExperimentOutcome outcome = io::run_experiment(spec);
      io::write_report(out_dir, spec, outcome.multi,
                       outcome.single ? &*outcome.single : nullptr, force);
      print_point_summaries(outcome.multi, quiet);
      if (!quiet) std::printf("report written to %s\n", out_dir.string().c_str());
      return outcome.any_failed() ? 1 : 0;
    });
  }

  // plot: --config names the report; SVGs land in --out (default: the report
  // directory itself).
  return run_guarded([&]() {
    const fs::path target = opt_out->count() > 0
                                ? out_dir
                                : (fs::is_directory(config_path)
                                       ? config_path
                                       : config_path.parent_path());
    const auto files = io::plot_report(config_path, target);
    if (!quiet) {
      for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
    }
    return 0;
  });
}
