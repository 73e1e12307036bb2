#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

namespace {

using atsltd::cli::RunConfig;

RunConfig make_config(const std::string& config_path) {
  if (config_path.empty()) return RunConfig{};
  return atsltd::cli::load_run_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "atsltd: adaptive event-to-frame conversion and tracking-by-detection toolkit.\n"
      "Config file: flat key=value lines with section.key names (see README); flags\n"
      "override file values. ATSLTD_LOG=0|1|2 sets verbosity."};
  app.require_subcommand(1);
  argv = app.ensure_utf8(argv);

  // calibrate
  auto* calibrate = app.add_subcommand(
      "calibrate",
      "Fit a NZGE confidence interval (defaults: omega=0.05, two-sided Student t;\n"
      "the published 240x180 interval is [0.0832, 0.0927])");
  struct {
    std::string config, samples, stats, events, out = "out";
    double omega = 0.05, window_ms = 30.0;
  } cal;
  calibrate->add_option("--config", cal.config, "run configuration file");
  calibrate->add_option("--samples", cal.samples,
                        "text file with one NZGE sample per line, or - for stdin");
  calibrate->add_option("--stats", cal.stats, "summary statistics as mean,stddev,n");
  calibrate->add_option("--events", cal.events,
                        "event stream to bootstrap from with fixed time windows");
  auto* cal_omega =
      calibrate->add_option("--omega", cal.omega, "significance level")->capture_default_str();
  auto* cal_window = calibrate->add_option("--window-ms", cal.window_ms,
                                           "bootstrap window length in milliseconds")
                         ->capture_default_str();
  calibrate->add_option("--out", cal.out, "output directory")->capture_default_str();
  calibrate->callback([&] {
    RunConfig cfg = make_config(cal.config);
    if (cal_omega->count()) cfg.omega = cal.omega;
    const double window = cal_window->count() ? cal.window_ms : -1.0;
    atsltd::cli::cmd_calibrate(cfg, cal.samples, cal.stats, cal.events, window, cal.out);
  });

  // track
  auto* track = app.add_subcommand(
      "track",
      "Track one object through an event stream (defaults: tau=1.5, lambda=0.7,\n"
      "mu=0.3, NZGE check every 200 events, interval [0.0832, 0.0927])");
  struct {
    std::string config, events, box, out = "out";
    bool dump_frames = false;
    int workers = 1;
  } trk;
  track->add_option("--config", trk.config, "run configuration file");
  track->add_option("--events", trk.events, "event stream file")->required();
  track->add_option("--box", trk.box, "initial box as x,y,w,h")->required();
  track->add_option("--out", trk.out, "output directory")->capture_default_str();
  track->add_flag("--dump-frames", trk.dump_frames, "write PGM pair and sidecar per frame");
  auto* trk_workers = track->add_option("--workers", trk.workers, "worker threads");
  track->callback([&] {
    RunConfig cfg = make_config(trk.config);
    if (trk_workers->count()) cfg.workers = trk.workers;
    atsltd::cli::cmd_track(cfg, trk.events, trk.box, trk.out, trk.dump_frames);
  });

  // eval
  auto* eval = app.add_subcommand(
      "eval", "Score a results CSV against ground truth (success threshold 0.5)");
  struct {
    std::string config, results, gt, out = "out";
  } evl;
  eval->add_option("--config", evl.config, "run configuration file");
  eval->add_option("--results", evl.results, "tracking results CSV")->required();
  eval->add_option("--gt", evl.gt, "ground-truth CSV")->required();
  eval->add_option("--out", evl.out, "output directory")->capture_default_str();
  eval->callback([&] {
    atsltd::cli::cmd_eval(make_config(evl.config), evl.results, evl.gt, evl.out);
  });

  // render
  auto* render = app.add_subcommand(
      "render",
      "Overlay result boxes on dumped frames (recovering frames draw dashed)");
  struct {
    std::string config, results, frames, out = "out";
    int workers = 1;
  } ren;
  render->add_option("--config", ren.config, "run configuration file");
  render->add_option("--results", ren.results, "tracking results CSV")->required();
  render->add_option("--frames-dir", ren.frames, "directory of dumped frames");
  render->add_option("--out", ren.out, "output directory")->capture_default_str();
  render->add_option("--workers", ren.workers, "worker threads");
  render->callback([&] {
    atsltd::cli::cmd_render(make_config(ren.config), ren.results, ren.frames, ren.out);
  });

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate an ideal event stream and ground truth from a scene script");
  struct {
    std::string config, script, out = "out";
    std::uint64_t seed = 0;
  } syn;
  synth->add_option("--config", syn.config, "run configuration file");
  synth->add_option("--script", syn.script, "scene script JSON")->required();
  auto* syn_seed = synth->add_option("--seed", syn.seed, "override the script seed");
  synth->add_option("--out", syn.out, "output directory")->capture_default_str();
  synth->callback([&] {
    RunConfig cfg = make_config(syn.config);
    if (syn_seed->count()) {
      cfg.seed = syn.seed;
      cfg.seed_set = true;
    }
    atsltd::cli::cmd_synth(cfg, syn.script, syn.out);
  });

  // convert
  auto* convert = app.add_subcommand(
      "convert",
      "Convert an event stream to frames (atsltd: adaptive NZGE cuts; ftw: fixed\n"
      "time windows, default 9 ms)");
  struct {
    std::string config, events, mode = "atsltd", out = "out";
    double window_ms = 9.0;
  } cnv;
  convert->add_option("--config", cnv.config, "run configuration file");
  convert->add_option("--events", cnv.events, "event stream file")->required();
  convert->add_option("--mode", cnv.mode, "conversion mode")
      ->check(CLI::IsMember({"atsltd", "ftw"}))
      ->capture_default_str();
  convert->add_option("--window-ms", cnv.window_ms, "window length for ftw mode")
      ->capture_default_str();
  convert->add_option("--out", cnv.out, "output directory")->capture_default_str();
  convert->callback([&] {
    atsltd::cli::cmd_convert(make_config(cnv.config), cnv.events, cnv.mode, cnv.window_ms,
                             cnv.out);
  });

  // bench
  auto* bench = app.add_subcommand(
      "bench",
      "Measure event-loop throughput: ingest, surface update and batched NZGE\n"
      "checks every 200 events (single core)");
  struct {
    std::string config, events;
    std::int64_t count = 5'000'000;
    int repeat = 3;
  } bnc;
  bench->add_option("--config", bnc.config, "run configuration file");
  bench->add_option("--events", bnc.events, "event stream file (default: synthetic square)");
  bench->add_option("--events-count", bnc.count, "synthetic stream length")
      ->capture_default_str();
  bench->add_option("--repeat", bnc.repeat, "timing repetitions, best wins")
      ->capture_default_str();
  bench->callback([&] {
    atsltd::cli::cmd_bench(make_config(bnc.config), bnc.events, bnc.count, bnc.repeat);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
