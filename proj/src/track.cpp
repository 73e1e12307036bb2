#include "atsltd/track.hpp"

#include <algorithm>
#include <cmath>

namespace atsltd {

TrackState TrackState::init(const BoundingBox& first_box, std::int64_t first_frame_index) {
  if (!first_box.valid()) throw ConfigError("initial box is degenerate");
  TrackState state;
  state.current = first_box;
  state.last_confident = first_box;
  state.mode = TrackMode::Tracking;
  state.history.push_back({first_frame_index, first_box, 1.0, TrackMode::Tracking});
  return state;
}

namespace {

void record(TrackState& state, std::int64_t frame_index, double iou_prev) {
  state.history.push_back({frame_index, state.current, iou_prev, state.mode});
}

}  // namespace

void step(TrackState& state, const AtslTdFrame& frame, const TrackerConfig& cfg,
          const DetectorConfig& det_cfg, std::int64_t frame_index) {
  const BoundingBox prev = state.current;
  const SearchRegion region = SearchRegion::around(prev, cfg.tau, frame.geometry);
  const ProposalSet set = propose(frame, region, det_cfg);
  const std::vector<Proposal> refined = refine(prev, set.proposals, cfg.lambda);

  // winner: largest IoU with the previous box; ties by refine score, then by
  // proposal rank (refine preserves detector order)
  const Proposal* best = nullptr;
  double best_iou = -1.0;
  for (const Proposal& p : refined) {
    const double overlap = iou(prev, p.box);
    if (overlap > best_iou || (overlap == best_iou && best && p.refine_score > best->refine_score)) {
      best = &p;
      best_iou = overlap;
    }
  }

  if (best && best_iou >= cfg.mu) {
    state.current = best->box;
    state.last_confident = best->box;
    state.mode = TrackMode::Tracking;
    record(state, frame_index, best_iou);
  } else {
    // detection failure: hold the last confident box and start recovering
    state.mode = TrackMode::Recovering;
    state.frames_in_recovery = 1;
    state.current = state.last_confident;
    record(state, frame_index, best ? best_iou : 0.0);
  }
}

void recover_step(TrackState& state, const AtslTdFrame& frame, const TrackerConfig& cfg,
                  const DetectorConfig& det_cfg, std::int64_t frame_index) {
  const double growth = std::pow(cfg.recovery_growth, state.frames_in_recovery);
  const BoundingBox& anchor = state.last_confident;
  const BoundingBox grown{anchor.cx() - 0.5 * growth * anchor.w,
                          anchor.cy() - 0.5 * growth * anchor.h, growth * anchor.w,
                          growth * anchor.h};
  const SearchRegion region{clip_to_sensor(grown, frame.geometry), anchor};
  const ProposalSet set = propose(frame, region, det_cfg);

  const Proposal* best = nullptr;
  double best_score = -1.0;
  for (const Proposal& p : set.proposals) {
    const double score = refine_score(anchor, p.box);
    if (score > best_score) {
      best = &p;
      best_score = score;
    }
  }

  if (best && best_score >= cfg.recovery_resume_score) {
    state.current = best->box;
    state.last_confident = best->box;
    state.mode = TrackMode::Tracking;
    state.frames_in_recovery = 0;
    record(state, frame_index, iou(anchor, best->box));
  } else {
    ++state.frames_in_recovery;
    state.current = anchor;
    record(state, frame_index, 0.0);
  }
}

void advance(TrackState& state, const AtslTdFrame& frame, const TrackerConfig& cfg,
             const DetectorConfig& det_cfg, std::int64_t frame_index) {
  if (state.mode == TrackMode::Tracking)
    step(state, frame, cfg, det_cfg, frame_index);
  else
    recover_step(state, frame, cfg, det_cfg, frame_index);
}

std::vector<AtslTdFrame> convert_adaptive(const std::vector<Event>& events,
                                          SensorGeometry geometry, const PipelineConfig& cfg,
                                          const std::function<void(const AtslTdFrame&)>& on_frame) {
  if (cfg.check_cadence < 1) throw ConfigError("check cadence must be >= 1");
  if (!(cfg.interval.alpha > 0.0)) throw ConfigError("interval lower bound must be positive");

  std::vector<AtslTdFrame> frames;
  if (events.empty()) return frames;

  Surface surface(geometry, events.front().t);
  NzgeMonitor monitor(geometry, cfg.grid);
  int since_check = 0;

  auto cut = [&](double nzge_value) {
    AtslTdFrame frame = surface.finalize_frame();
    frame.nzge_at_cut = nzge_value;
    monitor.reset();
    since_check = 0;
    if (on_frame) on_frame(frame);
    frames.push_back(std::move(frame));
  };

  for (const Event& e : events) {
    surface.apply_event(e);
    monitor.on_event(e.u, e.v);
    if (++since_check < cfg.check_cadence) {
      if (cfg.max_open_frame_us > 0 &&
          e.t - surface.frame_start() >= cfg.max_open_frame_us) {
        const auto value = surface_nzge(surface, cfg.grid);
        cut(value.value_or(0.0));
      }
      continue;
    }
    since_check = 0;
    if (monitor.should_finalize(surface, cfg.interval)) {
      // the monitor's estimate is approximate; store the exact frame value
      const auto exact = surface_nzge(surface, cfg.grid);
      cut(exact.value_or(0.0));
    } else if (cfg.max_open_frame_us > 0 &&
               e.t - surface.frame_start() >= cfg.max_open_frame_us) {
      const auto value = surface_nzge(surface, cfg.grid);
      cut(value.value_or(0.0));
    }
  }
  // a trailing open frame never reached the entropy band; drop it
  return frames;
}

TrackState run_tracker(const std::vector<AtslTdFrame>& frames, const BoundingBox& first_box,
                       const TrackerConfig& cfg, const DetectorConfig& det_cfg) {
  if (frames.empty()) throw ConfigError("no frames to track over");
  TrackState state = TrackState::init(first_box, 0);
  for (std::size_t i = 1; i < frames.size(); ++i)
    advance(state, frames[i], cfg, det_cfg, static_cast<std::int64_t>(i));
  return state;
}

TrackStreamResult track_stream(const std::vector<Event>& events, SensorGeometry geometry,
                               const BoundingBox& first_box, const PipelineConfig& pipeline_cfg,
                               const TrackerConfig& tracker_cfg, const DetectorConfig& det_cfg) {
  TrackStreamResult result;
  bool initialized = false;
  result.frames = convert_adaptive(events, geometry, pipeline_cfg, [&](const AtslTdFrame& f) {
    if (!initialized) {
      result.state = TrackState::init(first_box, 0);
      initialized = true;
    } else {
      advance(result.state, f, tracker_cfg, det_cfg,
              static_cast<std::int64_t>(result.state.history.size()));
    }
  });
  return result;
}

}  // namespace atsltd
