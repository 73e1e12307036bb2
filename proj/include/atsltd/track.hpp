#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "atsltd/detect.hpp"
#include "atsltd/nzge.hpp"

namespace atsltd {

struct TrackerConfig {
  double tau = 1.5;     // search region inflation, > 1
  double lambda = 0.7;  // proposal refine threshold
  double mu = 0.3;      // failure IoU threshold
  double recovery_growth = 1.5;        // region growth per recovery frame
  double recovery_resume_score = 0.7;  // refine score needed to resume
};

enum class TrackMode : std::uint8_t { Tracking, Recovering };

struct StepRecord {
  std::int64_t frame_index = 0;
  BoundingBox box;
  double iou_prev = 0.0;
  TrackMode mode = TrackMode::Tracking;
};

// Single-object tracker state. In Tracking mode the last confident box equals
// the current box; while Recovering the current (reported) box is held at the
// last confident one.
struct TrackState {
  BoundingBox current;
  BoundingBox last_confident;
  TrackMode mode = TrackMode::Tracking;
  int frames_in_recovery = 0;
  std::vector<StepRecord> history;

  static TrackState init(const BoundingBox& first_box, std::int64_t first_frame_index = 0);
};

// One tracking-by-detection step: propose inside the search region around the
// previous box, refine with lambda, adopt the candidate with the largest IoU
// against the previous box if that IoU reaches mu; otherwise switch to
// Recovering and hold. Ties break by refine score, then proposal rank.
void step(TrackState& state, const AtslTdFrame& frame, const TrackerConfig& cfg,
          const DetectorConfig& det_cfg, std::int64_t frame_index);

// Recovery step: the search region grows around the last confident box each
// frame (clipped to the sensor); candidates are judged by refine score alone
// and tracking resumes once one reaches the resume score.
void recover_step(TrackState& state, const AtslTdFrame& frame, const TrackerConfig& cfg,
                  const DetectorConfig& det_cfg, std::int64_t frame_index);

// Dispatches to step/recover_step based on the current mode.
void advance(TrackState& state, const AtslTdFrame& frame, const TrackerConfig& cfg,
             const DetectorConfig& det_cfg, std::int64_t frame_index);

struct PipelineConfig {
  GridSpec grid;
  ConfidenceInterval interval;
  int check_cadence = 200;          // events between NZGE checks
  Timestamp max_open_frame_us = 0;  // 0 = unlimited
};

// Adaptive event-to-frame conversion: accumulate onto a Surface, check NZGE
// every check_cadence events, cut when it reaches the interval. Each emitted
// frame carries its exact NZGE at the cut. A trailing unfinished frame is
// discarded. on_frame, when set, sees every frame as it is cut.
std::vector<AtslTdFrame> convert_adaptive(
    const std::vector<Event>& events, SensorGeometry geometry, const PipelineConfig& cfg,
    const std::function<void(const AtslTdFrame&)>& on_frame = nullptr);

// Runs the tracker over already-converted frames. The state is initialized
// from first_box on the first frame; history gets one record per frame.
TrackState run_tracker(const std::vector<AtslTdFrame>& frames, const BoundingBox& first_box,
                       const TrackerConfig& cfg, const DetectorConfig& det_cfg);

struct TrackStreamResult {
  TrackState state;
  std::vector<AtslTdFrame> frames;
};

// Full pipeline: conversion plus tracking in one pass. A stream that yields
// no frames (empty, or never reaching the entropy band) returns an empty
// result rather than an error.
TrackStreamResult track_stream(const std::vector<Event>& events, SensorGeometry geometry,
                               const BoundingBox& first_box, const PipelineConfig& pipeline_cfg,
                               const TrackerConfig& tracker_cfg, const DetectorConfig& det_cfg);

}  // namespace atsltd
