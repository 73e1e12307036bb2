#include "atsltd/eval.hpp"

#include <algorithm>
#include <future>
#include <json.hpp>

namespace atsltd {

BoundingBox interpolate_ground_truth(const GroundTruthTrack& track, Timestamp t) {
  const auto& entries = track.entries;
  if (entries.empty()) throw EvalError("ground-truth track is empty");
  if (t <= entries.front().t) return entries.front().box;
  if (t >= entries.back().t) return entries.back().box;
  const auto it = std::upper_bound(
      entries.begin(), entries.end(), t,
      [](Timestamp v, const GroundTruthEntry& e) { return v < e.t; });
  const GroundTruthEntry& b = *it;
  const GroundTruthEntry& a = *(it - 1);
  const double f = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
  return {a.box.x + f * (b.box.x - a.box.x), a.box.y + f * (b.box.y - a.box.y),
          a.box.w + f * (b.box.w - a.box.w), a.box.h + f * (b.box.h - a.box.h)};
}

double average_precision(const std::vector<BoundingBox>& estimates,
                         const std::vector<BoundingBox>& ground_truth) {
  if (estimates.empty()) throw EvalError("no frames to score");
  if (estimates.size() != ground_truth.size())
    throw EvalError("estimate and ground-truth sequences differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) sum += iou(estimates[i], ground_truth[i]);
  return sum / static_cast<double>(estimates.size());
}

double average_robustness(const std::vector<bool>& success_flags) {
  if (success_flags.empty()) throw EvalError("no runs to average");
  double sum = 0.0;
  for (const bool f : success_flags) sum += f ? 1.0 : 0.0;
  return sum / static_cast<double>(success_flags.size());
}

ObjectResult score_against_track(const std::vector<BoundingBox>& estimates,
                                 const std::vector<Timestamp>& frame_end_times,
                                 const GroundTruthTrack& track) {
  if (estimates.size() != frame_end_times.size())
    throw EvalError("estimates and frame times differ in length");
  if (estimates.empty()) throw EvalError("no frames to score");
  if (track.entries.empty()) throw EvalError("ground-truth track is empty");
  if (frame_end_times.back() < track.entries.front().t ||
      frame_end_times.front() > track.entries.back().t)
    throw EvalError("frames do not overlap the ground-truth time span");

  ObjectResult result;
  result.object_id = track.object_id;
  result.frame_ious.reserve(estimates.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const BoundingBox gt = interpolate_ground_truth(track, frame_end_times[i]);
    const double overlap = iou(estimates[i], gt);
    result.frame_ious.push_back(overlap);
    sum += overlap;
  }
  result.ap = sum / static_cast<double>(estimates.size());
  result.success = result.ap >= 0.5;
  return result;
}

namespace {

struct RunOutput {
  ObjectResult result;
  std::vector<ReinitEvent> reinits;
};

RunOutput run_one(const std::vector<AtslTdFrame>& frames, const GroundTruthTrack& track,
                  const EvalConfig& cfg, const TrackerConfig& tracker_cfg,
                  const DetectorConfig& det_cfg, int rep) {
  if (frames.empty()) throw EvalError("no frames to evaluate over");
  RunOutput out;

  std::vector<Timestamp> end_times;
  end_times.reserve(frames.size());
  for (const AtslTdFrame& f : frames) end_times.push_back(f.end_time);

  const BoundingBox first_gt = interpolate_ground_truth(track, end_times.front());
  if (!first_gt.valid()) throw EvalError("object not visible on the first frame");

  TrackState state = TrackState::init(first_gt, 0);
  std::vector<BoundingBox> estimates{first_gt};
  estimates.reserve(frames.size());
  int consecutive_failures = 0;
  bool pending_reinit = false;

  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (pending_reinit) {
      const BoundingBox gt = interpolate_ground_truth(track, end_times[i]);
      if (gt.valid()) {
        state = TrackState::init(gt, static_cast<std::int64_t>(i));
        estimates.push_back(gt);
        pending_reinit = false;
        consecutive_failures = 0;
        continue;
      }
      // target currently outside the sensor: hold and try again next frame
      estimates.push_back(estimates.back());
      continue;
    }

    advance(state, frames[i], tracker_cfg, det_cfg, static_cast<std::int64_t>(i));
    const BoundingBox est = state.history.back().box;
    estimates.push_back(est);

    const BoundingBox gt = interpolate_ground_truth(track, end_times[i]);
    if (iou(est, gt) < cfg.failure_ap_threshold)
      ++consecutive_failures;
    else
      consecutive_failures = 0;

    if (cfg.reinit_on_failure && consecutive_failures >= cfg.reinit_consecutive &&
        i + 1 < frames.size()) {
      out.reinits.push_back({rep, track.object_id, static_cast<std::int64_t>(i)});
      pending_reinit = true;
      consecutive_failures = 0;
    }
  }

  out.result = score_against_track(estimates, end_times, track);
  out.result.success = out.result.ap >= cfg.failure_ap_threshold;
  return out;
}

}  // namespace

EvalReport run_protocol_on_frames(const std::vector<AtslTdFrame>& frames,
                                  const std::vector<GroundTruthTrack>& tracks,
                                  const EvalConfig& cfg, const TrackerConfig& tracker_cfg,
                                  const DetectorConfig& det_cfg, int workers) {
  if (cfg.n_rep < 1) throw ConfigError("n_rep must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (tracks.empty()) throw EvalError("no ground-truth tracks");

  const std::size_t n_runs = static_cast<std::size_t>(cfg.n_rep) * tracks.size();
  std::vector<RunOutput> outputs(n_runs);
  auto run_index = [&](std::size_t idx) {
    const int rep = static_cast<int>(idx / tracks.size());
    const std::size_t obj = idx % tracks.size();
    outputs[idx] = run_one(frames, tracks[obj], cfg, tracker_cfg, det_cfg, rep);
  };

  if (workers == 1 || n_runs == 1) {
    for (std::size_t i = 0; i < n_runs; ++i) run_index(i);
  } else {
    const std::size_t n_threads = std::min<std::size_t>(workers, n_runs);
    std::vector<std::future<void>> futures;
    futures.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
      futures.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t i = t; i < n_runs; i += n_threads) run_index(i);
      }));
    for (auto& f : futures) f.get();
  }

  EvalReport report;
  std::vector<bool> success;
  double ap_sum = 0.0;
  for (RunOutput& out : outputs) {
    ap_sum += out.result.ap;
    success.push_back(out.result.success);
    for (const ReinitEvent& r : out.reinits) report.reinits.push_back(r);
    report.per_object.push_back(std::move(out.result));
  }
  report.ap = ap_sum / static_cast<double>(n_runs);
  report.ar = average_robustness(success);
  return report;
}

EvalReport run_protocol(const std::vector<Event>& events, SensorGeometry geometry,
                        const std::vector<GroundTruthTrack>& tracks, const EvalConfig& cfg,
                        const PipelineConfig& pipeline_cfg, const TrackerConfig& tracker_cfg,
                        const DetectorConfig& det_cfg, int workers) {
  const std::vector<AtslTdFrame> frames = convert_adaptive(events, geometry, pipeline_cfg);
  if (frames.empty()) throw EvalError("stream produced no frames");
  return run_protocol_on_frames(frames, tracks, cfg, tracker_cfg, det_cfg, workers);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["ap"] = report.ap;
  j["ar"] = report.ar;
  j["per_object"] = nlohmann::json::array();
  for (const ObjectResult& o : report.per_object)
    j["per_object"].push_back({{"id", o.object_id}, {"ap", o.ap}, {"success", o.success}});
  j["reinits"] = nlohmann::json::array();
  for (const ReinitEvent& r : report.reinits)
    j["reinits"].push_back(
        {{"rep", r.rep}, {"object_id", r.object_id}, {"frame_index", r.frame_index}});
  return j.dump(2) + "\n";
}

}  // namespace atsltd
