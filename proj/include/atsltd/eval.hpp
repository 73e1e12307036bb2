#pragma once

#include <string>
#include <vector>

#include "atsltd/event_io.hpp"
#include "atsltd/track.hpp"

namespace atsltd {

struct EvalConfig {
  int n_rep = 1;  // the pipeline is deterministic; kept for protocol parity
  double failure_ap_threshold = 0.5;
  bool reinit_on_failure = true;
  int reinit_consecutive = 3;  // frames of IoU < threshold before reinit
};

struct ReinitEvent {
  int rep = 0;
  int object_id = 0;
  std::int64_t frame_index = 0;  // frame at which the failure was declared
};

struct ObjectResult {
  int object_id = 0;
  double ap = 0.0;
  bool success = false;  // ap >= failure threshold
  std::vector<double> frame_ious;
};

struct EvalReport {
  std::vector<ObjectResult> per_object;
  double ap = 0.0;  // mean over reps and objects of per-frame IoU
  double ar = 0.0;  // fraction of successful (rep, object) runs
  std::vector<ReinitEvent> reinits;
};

// Ground-truth box linearly interpolated (position and size) at time t;
// clamped to the track's first/last entry outside its span.
BoundingBox interpolate_ground_truth(const GroundTruthTrack& track, Timestamp t);

// Mean per-frame IoU between aligned estimate and ground-truth boxes.
// Throws EvalError when the sequences are empty or misaligned.
double average_precision(const std::vector<BoundingBox>& estimates,
                         const std::vector<BoundingBox>& ground_truth);

// Mean of per-run success flags.
double average_robustness(const std::vector<bool>& success_flags);

// Scores an existing per-frame estimate sequence against a track. Frame end
// times must overlap the ground-truth time span.
ObjectResult score_against_track(const std::vector<BoundingBox>& estimates,
                                 const std::vector<Timestamp>& frame_end_times,
                                 const GroundTruthTrack& track);

// Full protocol: converts the stream once, then tracks every object n_rep
// times, reinitializing from ground truth at the next frame after the
// estimate stays under the failure threshold for reinit_consecutive frames.
EvalReport run_protocol(const std::vector<Event>& events, SensorGeometry geometry,
                        const std::vector<GroundTruthTrack>& tracks, const EvalConfig& cfg,
                        const PipelineConfig& pipeline_cfg, const TrackerConfig& tracker_cfg,
                        const DetectorConfig& det_cfg, int workers = 1);

// Same protocol over frames that have already been converted.
EvalReport run_protocol_on_frames(const std::vector<AtslTdFrame>& frames,
                                  const std::vector<GroundTruthTrack>& tracks,
                                  const EvalConfig& cfg, const TrackerConfig& tracker_cfg,
                                  const DetectorConfig& det_cfg, int workers = 1);

std::string report_to_json(const EvalReport& report);

}  // namespace atsltd
