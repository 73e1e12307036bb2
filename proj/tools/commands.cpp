#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "atsltd/image_io.hpp"
#include "atsltd/results_io.hpp"
#include "atsltd/synth.hpp"

namespace fs = std::filesystem;

namespace atsltd::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  }
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("bad boolean value for " + key + ": " + value);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
}

std::vector<Event> load_events_checked(const std::string& path, const SensorGeometry& geometry) {
  if (path.empty()) throw ConfigError("no events file given (--events)");
  if (!fs::exists(path)) throw Error("events file does not exist: " + path);
  return read_events_file(path, geometry);
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "sensor.width") cfg.geometry.width = static_cast<std::int32_t>(to_int(key, value));
  else if (key == "sensor.height") cfg.geometry.height = static_cast<std::int32_t>(to_int(key, value));
  else if (key == "grid.patch") cfg.grid_patch = static_cast<int>(to_int(key, value));
  else if (key == "interval.source") {
    if (value != "paper-default" && value != "file" && value != "calibrate-inline")
      throw ConfigError("unknown interval.source: " + value);
    cfg.interval_source = value;
  } else if (key == "interval.path") cfg.interval_path = value;
  else if (key == "interval.omega") cfg.omega = to_double(key, value);
  else if (key == "interval.window_ms") cfg.calibrate_window_ms = to_double(key, value);
  else if (key == "pipeline.check_cadence") cfg.check_cadence = static_cast<int>(to_int(key, value));
  else if (key == "pipeline.max_open_frame_ms") cfg.max_open_frame_ms = to_double(key, value);
  else if (key == "tracker.tau") cfg.tracker.tau = to_double(key, value);
  else if (key == "tracker.lambda") cfg.tracker.lambda = to_double(key, value);
  else if (key == "tracker.mu") cfg.tracker.mu = to_double(key, value);
  else if (key == "tracker.recovery_growth") cfg.tracker.recovery_growth = to_double(key, value);
  else if (key == "tracker.recovery_resume_score")
    cfg.tracker.recovery_resume_score = to_double(key, value);
  else if (key == "detector.max_boxes") cfg.detector.max_boxes = static_cast<int>(to_int(key, value));
  else if (key == "detector.min_box_area") cfg.detector.min_box_area = to_double(key, value);
  else if (key == "detector.nms_overlap") cfg.detector.nms_overlap = to_double(key, value);
  else if (key == "eval.n_rep") cfg.eval.n_rep = static_cast<int>(to_int(key, value));
  else if (key == "eval.failure_threshold") cfg.eval.failure_ap_threshold = to_double(key, value);
  else if (key == "eval.reinit_consecutive")
    cfg.eval.reinit_consecutive = static_cast<int>(to_int(key, value));
  else if (key == "eval.reinit_on_failure") cfg.eval.reinit_on_failure = to_bool(key, value);
  else if (key == "synth.seed") {
    cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    cfg.seed_set = true;
  } else if (key == "run.workers") cfg.workers = static_cast<int>(to_int(key, value));
  else throw ConfigError("unknown config key: " + key);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key=value in config", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty config key", line_no);
    apply_config_line(cfg, key, value);
  }
  if (!cfg.interval_path.empty() && !fs::exists(cfg.interval_path))
    throw ConfigError("interval.path does not exist: " + cfg.interval_path);
  return cfg;
}

GridSpec grid_for(const RunConfig& cfg) {
  return GridSpec::for_geometry(cfg.geometry, cfg.grid_patch);
}

PipelineConfig pipeline_for(const RunConfig& cfg, const ConfidenceInterval& interval) {
  PipelineConfig p;
  p.grid = grid_for(cfg);
  p.interval = interval;
  p.check_cadence = cfg.check_cadence;
  p.max_open_frame_us = static_cast<Timestamp>(std::llround(cfg.max_open_frame_ms * 1000.0));
  return p;
}

namespace {

CalibrationSet bootstrap_samples(const std::vector<Event>& events, const SensorGeometry& geometry,
                                 const GridSpec& grid, double window_ms) {
  if (!(window_ms > 0.0)) throw ConfigError("calibration window must be positive");
  const auto window_us = static_cast<Timestamp>(std::llround(window_ms * 1000.0));
  CalibrationSet set;
  for (const AtslTdFrame& frame : convert_fixed_time_window(events, geometry, window_us)) {
    const auto value = frame_nzge(frame, grid);
    if (value) set.add(*value);
  }
  return set;
}

}  // namespace

ConfidenceInterval resolve_interval(const RunConfig& cfg, const std::vector<Event>& events) {
  if (cfg.interval_source == "paper-default") return default_interval();
  if (cfg.interval_source == "file") {
    if (cfg.interval_path.empty()) throw ConfigError("interval.source=file needs interval.path");
    return read_calibration_file(cfg.interval_path);
  }
  // calibrate-inline
  const CalibrationSet set =
      bootstrap_samples(events, cfg.geometry, grid_for(cfg), cfg.calibrate_window_ms);
  const ConfidenceInterval interval = calibrate_interval(set, cfg.omega);
  log_info("calibrated interval [" + std::to_string(interval.alpha) + ", " +
           std::to_string(interval.beta) + "] from " + std::to_string(set.size()) + " windows");
  return interval;
}

void write_calibration_file(const std::string& path, const ConfidenceInterval& interval,
                            std::size_t n_samples, const GridSpec& grid) {
  nlohmann::json j;
  j["alpha"] = interval.alpha;
  j["beta"] = interval.beta;
  j["omega"] = interval.omega;
  j["samples"] = n_samples;
  j["log_base"] = 2;
  j["grid"] = {{"p", grid.p}, {"q", grid.q}, {"r", grid.r}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw Error("short write: " + path);
}

ConfidenceInterval read_calibration_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open calibration file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    ConfidenceInterval interval;
    interval.alpha = j.at("alpha").get<double>();
    interval.beta = j.at("beta").get<double>();
    interval.omega = j.value("omega", 0.05);
    if (!(interval.alpha > 0.0) || !(interval.beta >= interval.alpha))
      throw FormatError("calibration bounds out of order in " + path);
    return interval;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad calibration file " + path + ": " + e.what());
  }
}

BoundingBox parse_box_arg(const std::string& text) {
  std::string fields = text;
  for (char& c : fields)
    if (c == ',') c = ' ';
  std::istringstream ss(fields);
  BoundingBox box;
  if (!(ss >> box.x >> box.y >> box.w >> box.h) || !(ss >> std::ws).eof())
    throw ConfigError("expected --box x,y,w,h, got: " + text);
  if (!box.valid()) throw ConfigError("box extent must be positive: " + text);
  return box;
}

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("ATSLTD_LOG");
    if (!env || !*env) return 1;
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      return 1;
    }
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[atsltd] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[atsltd] " << msg << "\n";
}

void cmd_calibrate(const RunConfig& cfg, const std::string& samples_path,
                   const std::string& stats_arg, const std::string& events_path,
                   double window_ms, const std::string& out_dir) {
  const int n_sources =
      (samples_path.empty() ? 0 : 1) + (stats_arg.empty() ? 0 : 1) + (events_path.empty() ? 0 : 1);
  if (n_sources != 1)
    throw ConfigError("give exactly one of --samples, --stats, --events");

  ConfidenceInterval interval;
  std::size_t n_samples = 0;
  const GridSpec grid = grid_for(cfg);

  if (!stats_arg.empty()) {
    std::string fields = stats_arg;
    for (char& c : fields)
      if (c == ',') c = ' ';
    std::istringstream ss(fields);
    double mean = 0.0, stddev = 0.0;
    int n = 0;
    if (!(ss >> mean >> stddev >> n) || !(ss >> std::ws).eof())
      throw ConfigError("expected --stats mean,stddev,n, got: " + stats_arg);
    interval = interval_from_stats(mean, stddev, n, cfg.omega);
    n_samples = static_cast<std::size_t>(n);
  } else if (!samples_path.empty()) {
    CalibrationSet set;
    auto consume = [&](std::istream& in) {
      double value = 0.0;
      while (in >> value) set.add(value);
      if (!in.eof()) throw FormatError("non-numeric calibration sample");
    };
    if (samples_path == "-") {
      consume(std::cin);
    } else {
      if (!fs::exists(samples_path)) throw Error("samples file does not exist: " + samples_path);
      std::ifstream in(samples_path);
      if (!in) throw Error("cannot open: " + samples_path);
      consume(in);
    }
    interval = calibrate_interval(set, cfg.omega);
    n_samples = set.size();
  } else {
    const std::vector<Event> events = load_events_checked(events_path, cfg.geometry);
    const double window = window_ms > 0.0 ? window_ms : cfg.calibrate_window_ms;
    const CalibrationSet set = bootstrap_samples(events, cfg.geometry, grid, window);
    interval = calibrate_interval(set, cfg.omega);
    n_samples = set.size();
  }

  ensure_dir(out_dir);
  const std::string path = out_dir + "/calibration.json";
  write_calibration_file(path, interval, n_samples, grid);
  log_info("wrote " + path);
  std::cout << "alpha=" << interval.alpha << " beta=" << interval.beta
            << " omega=" << interval.omega << " samples=" << n_samples << "\n";
}

void cmd_track(const RunConfig& cfg, const std::string& events_path, const std::string& box_arg,
               const std::string& out_dir, bool dump_frames) {
  if (box_arg.empty()) throw ConfigError("tracking needs --box x,y,w,h");
  const BoundingBox first_box = parse_box_arg(box_arg);
  const std::vector<Event> events = load_events_checked(events_path, cfg.geometry);
  if (events.empty()) throw Error("events file is empty: " + events_path);

  const ConfidenceInterval interval = resolve_interval(cfg, events);
  const PipelineConfig pipeline = pipeline_for(cfg, interval);
  const TrackStreamResult result =
      track_stream(events, cfg.geometry, first_box, pipeline, cfg.tracker, cfg.detector);
  log_info(std::to_string(result.frames.size()) + " frames from " +
           std::to_string(events.size()) + " events");

  ensure_dir(out_dir);
  write_results_file(out_dir + "/results.csv", rows_from_history(result.state, result.frames));
  if (dump_frames) {
    const std::string frames_dir = out_dir + "/frames";
    ensure_dir(frames_dir);
    for (std::size_t i = 0; i < result.frames.size(); ++i)
      dump_frame(frames_dir, result.frames[i], static_cast<std::int64_t>(i));
    log_info("dumped " + std::to_string(result.frames.size()) + " frame pairs to " + frames_dir);
  }
  log_info("wrote " + out_dir + "/results.csv");
}

void cmd_eval(const RunConfig& cfg, const std::string& results_path, const std::string& gt_path,
              const std::string& out_dir) {
  if (!fs::exists(results_path)) throw Error("results file does not exist: " + results_path);
  if (!fs::exists(gt_path)) throw Error("ground-truth file does not exist: " + gt_path);
  const std::vector<ResultRow> rows = parse_results_file(results_path);
  const std::vector<GroundTruthTrack> tracks = parse_ground_truth_file(gt_path);

  std::map<int, std::pair<std::vector<BoundingBox>, std::vector<Timestamp>>> by_object;
  for (const ResultRow& r : rows) {
    by_object[r.object_id].first.push_back(r.box);
    by_object[r.object_id].second.push_back(r.t_end);
  }

  EvalReport report;
  std::vector<bool> success;
  double ap_sum = 0.0;
  for (const GroundTruthTrack& track : tracks) {
    const auto it = by_object.find(track.object_id);
    if (it == by_object.end()) continue;
    ObjectResult result = score_against_track(it->second.first, it->second.second, track);
    result.success = result.ap >= cfg.eval.failure_ap_threshold;
    ap_sum += result.ap;
    success.push_back(result.success);
    report.per_object.push_back(std::move(result));
  }
  if (report.per_object.empty())
    throw EvalError("no object ids shared between results and ground truth");
  report.ap = ap_sum / static_cast<double>(report.per_object.size());
  report.ar = average_robustness(success);

  ensure_dir(out_dir);
  const std::string path = out_dir + "/report.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << report_to_json(report);
  if (!out) throw Error("short write: " + path);
  log_info("wrote " + path);
  std::cout << "ap=" << report.ap << " ar=" << report.ar << "\n";
}

void cmd_render(const RunConfig& cfg, const std::string& results_path,
                const std::string& frames_dir, const std::string& out_dir) {
  (void)cfg;
  if (!fs::exists(results_path)) throw Error("results file does not exist: " + results_path);
  const std::vector<ResultRow> rows = parse_results_file(results_path);
  ensure_dir(out_dir);
  if (rows.empty()) {
    log_info("no rows to render");
    return;
  }
  if (frames_dir.empty()) throw ConfigError("rendering needs --frames-dir");

  std::map<std::int64_t, std::vector<const ResultRow*>> by_frame;
  for (const ResultRow& r : rows) by_frame[r.frame_index].push_back(&r);

  constexpr std::array<std::uint8_t, 3> kTracking{255, 255, 0};
  constexpr std::array<std::uint8_t, 3> kRecovering{0, 255, 255};
  for (const auto& [index, frame_rows] : by_frame) {
    const AtslTdFrame frame = load_frame_dump(frames_dir, index);
    RgbImage img = compose_frame(frame);
    for (const ResultRow* r : frame_rows) {
      const bool recovering = r->mode == TrackMode::Recovering;
      draw_box(img, r->box, recovering ? kRecovering : kTracking, recovering);
    }
    write_ppm(out_dir + "/overlay_" + std::to_string(index) + ".ppm", img);
  }
  log_info("rendered " + std::to_string(by_frame.size()) + " overlays to " + out_dir);
}

void cmd_synth(const RunConfig& cfg, const std::string& script_path, const std::string& out_dir) {
  if (!fs::exists(script_path)) throw Error("scene script does not exist: " + script_path);
  SceneScript script = load_script(script_path);
  if (cfg.seed_set) script.seed = cfg.seed;
  const SynthResult result = generate(script);
  log_info(std::to_string(result.events.size()) + " events, " +
           std::to_string(result.tracks.size()) + " tracks");

  ensure_dir(out_dir);
  write_events_file(out_dir + "/events.txt", result.events);
  write_ground_truth_file(out_dir + "/gt.csv", result.tracks);
  log_info("wrote " + out_dir + "/events.txt and " + out_dir + "/gt.csv");
}

void cmd_convert(const RunConfig& cfg, const std::string& events_path, const std::string& mode,
                 double window_ms, const std::string& out_dir) {
  const std::vector<Event> events = load_events_checked(events_path, cfg.geometry);
  std::vector<AtslTdFrame> frames;
  if (mode == "ftw") {
    if (!(window_ms > 0.0)) throw ConfigError("ftw mode needs --window-ms > 0");
    frames = convert_fixed_time_window(
        events, cfg.geometry, static_cast<Timestamp>(std::llround(window_ms * 1000.0)));
  } else if (mode == "atsltd") {
    const ConfidenceInterval interval = resolve_interval(cfg, events);
    frames = convert_adaptive(events, cfg.geometry, pipeline_for(cfg, interval));
  } else {
    throw ConfigError("unknown conversion mode: " + mode);
  }

  ensure_dir(out_dir);
  for (std::size_t i = 0; i < frames.size(); ++i)
    dump_frame(out_dir, frames[i], static_cast<std::int64_t>(i));
  log_info("wrote " + std::to_string(frames.size()) + " frame pairs to " + out_dir);
  std::cout << "frames=" << frames.size() << "\n";
}

void cmd_bench(const RunConfig& cfg, const std::string& events_path, std::int64_t n_events,
               int repeats) {
  if (repeats < 1) throw ConfigError("bench repeats must be >= 1");
  std::vector<Event> events;
  SensorGeometry geometry = cfg.geometry;
  if (!events_path.empty()) {
    events = load_events_checked(events_path, geometry);
  } else {
    // translating square tuned to emit roughly n_events over two seconds
    if (n_events < 1000) throw ConfigError("bench needs at least 1000 events");
    const double speed = 100.0, side = 30.0, duration_s = 2.0;
    const double density =
        static_cast<double>(n_events) / (2.0 * side * speed * duration_s);
    SceneScript script;
    script.geometry = geometry;
    script.duration = static_cast<Timestamp>(duration_s * kMicrosPerSecond);
    script.seed = cfg.seed_set ? cfg.seed : 7;
    script.shapes.push_back(SceneScript::rectangle(
        side, side,
        {{0, 40.0, 90.0}, {script.duration, 40.0 + speed * duration_s, 90.0}}, density));
    events = generate(script).events;
  }
  if (events.size() < 2) throw Error("bench stream is empty");

  const GridSpec grid = grid_for(cfg);
  ConfidenceInterval interval;
  if (cfg.interval_source == "paper-default") {
    // the published interval is data dependent; bootstrap one off this stream
    // so the cut rate is representative
    const CalibrationSet set =
        bootstrap_samples(events, geometry, grid, cfg.calibrate_window_ms);
    interval = calibrate_interval(set, cfg.omega);
  } else {
    interval = resolve_interval(cfg, events);
  }
  log_debug("bench interval alpha=" + std::to_string(interval.alpha));

  double best_rate = 0.0;
  std::int64_t frames = 0;
  for (int rep = 0; rep < repeats; ++rep) {
    Surface surface(geometry, events.front().t);
    NzgeMonitor monitor(geometry, grid);
    int since_check = 0;
    std::int64_t cut_count = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const Event& e : events) {
      surface.apply_event(e);
      monitor.on_event(e.u, e.v);
      if (++since_check >= cfg.check_cadence) {
        since_check = 0;
        if (monitor.should_finalize(surface, interval)) {
          surface.finalize_frame();
          monitor.reset();
          ++cut_count;
        }
      }
    }
    const auto stop = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(stop - start).count();
    const double rate = static_cast<double>(events.size()) / seconds;
    best_rate = std::max(best_rate, rate);
    frames = cut_count;
    log_debug("rep " + std::to_string(rep) + ": " + std::to_string(rate) + " events/s");
  }

  std::cout << "events=" << events.size() << "\n"
            << "frames=" << frames << "\n"
            << "events_per_second=" << std::llround(best_rate) << "\n";
}

}  // namespace atsltd::cli
