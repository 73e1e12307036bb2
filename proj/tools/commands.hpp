#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atsltd/eval.hpp"
#include "atsltd/event_io.hpp"
#include "atsltd/nzge.hpp"
#include "atsltd/track.hpp"

namespace atsltd::cli {

// Merged file + flag configuration. The file is flat key=value text with
// section.key names; command-line flags override file values.
struct RunConfig {
  SensorGeometry geometry;
  int grid_patch = 4;
  std::string interval_source = "paper-default";  // paper-default | file | calibrate-inline
  std::string interval_path;
  double omega = 0.05;
  double calibrate_window_ms = 30.0;
  int check_cadence = 200;
  double max_open_frame_ms = 0.0;  // 0 = unlimited
  TrackerConfig tracker;
  DetectorConfig detector;
  EvalConfig eval;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
};

RunConfig load_run_config(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

GridSpec grid_for(const RunConfig& cfg);
PipelineConfig pipeline_for(const RunConfig& cfg, const ConfidenceInterval& interval);

// paper-default returns the published interval; file reads a calibration
// JSON; calibrate-inline bootstraps from the stream itself with fixed time
// windows of calibrate_window_ms.
ConfidenceInterval resolve_interval(const RunConfig& cfg, const std::vector<Event>& events);

void write_calibration_file(const std::string& path, const ConfidenceInterval& interval,
                            std::size_t n_samples, const GridSpec& grid);
ConfidenceInterval read_calibration_file(const std::string& path);

BoundingBox parse_box_arg(const std::string& text);

// Verbosity from ATSLTD_LOG: 0 quiet, 1 info (default), 2 debug. Messages go
// to stderr; stdout carries only machine-readable output.
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

void cmd_calibrate(const RunConfig& cfg, const std::string& samples_path,
                   const std::string& stats_arg, const std::string& events_path,
                   double window_ms, const std::string& out_dir);
void cmd_track(const RunConfig& cfg, const std::string& events_path, const std::string& box_arg,
               const std::string& out_dir, bool dump_frames);
void cmd_eval(const RunConfig& cfg, const std::string& results_path, const std::string& gt_path,
              const std::string& out_dir);
void cmd_render(const RunConfig& cfg, const std::string& results_path,
                const std::string& frames_dir, const std::string& out_dir);
void cmd_synth(const RunConfig& cfg, const std::string& script_path, const std::string& out_dir);
void cmd_convert(const RunConfig& cfg, const std::string& events_path, const std::string& mode,
                 double window_ms, const std::string& out_dir);
void cmd_bench(const RunConfig& cfg, const std::string& events_path, std::int64_t n_events,
               int repeats);

}  // namespace atsltd::cli
