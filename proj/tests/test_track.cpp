#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "atsltd/synth.hpp"
#include "atsltd/track.hpp"

using namespace atsltd;

namespace {

AtslTdFrame blank_frame(const SensorGeometry& g) {
  AtslTdFrame frame;
  frame.geometry = g;
  frame.on = IntensityPlane::Zero(g.height, g.width);
  frame.off = IntensityPlane::Zero(g.height, g.width);
  frame.end_time = 1000;
  return frame;
}

void draw_ring(AtslTdFrame& frame, int x, int y, int side, std::uint8_t level = 200) {
  for (int d = 0; d < 2; ++d) {
    for (int u = x; u < x + side; ++u) {
      frame.on(y + d, u) = level;
      frame.on(y + side - 1 - d, u) = level;
    }
    for (int v = y; v < y + side; ++v) {
      frame.on(v, x + d) = level;
      frame.on(v, x + side - 1 - d) = level;
    }
  }
}

// pixel-set IoU on an integer raster, the slow way
double raster_iou(const BoundingBox& a, const BoundingBox& b, int raster = 30) {
  int inter = 0, uni = 0;
  for (int y = 0; y < raster; ++y)
    for (int x = 0; x < raster; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_a = cx > a.x && cx < a.x2() && cy > a.y && cy < a.y2();
      const bool in_b = cx > b.x && cx < b.x2() && cy > b.y && cy < b.y2();
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

}  // namespace

TEST_CASE("iou on the worked geometries") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
  CHECK(iou(a, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
}

TEST_CASE("iou is symmetric and matches a raster brute force") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> pos(0.0, 20.0);
  std::uniform_int_distribution<int> dim(1, 10);
  for (int i = 0; i < 100; ++i) {
    const BoundingBox a{std::floor(pos(rng)), std::floor(pos(rng)),
                        static_cast<double>(dim(rng)), static_cast<double>(dim(rng))};
    const BoundingBox b{std::floor(pos(rng)), std::floor(pos(rng)),
                        static_cast<double>(dim(rng)), static_cast<double>(dim(rng))};
    CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-12));
    CHECK(iou(a, b) == doctest::Approx(raster_iou(a, b)).epsilon(1e-9));
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
  }
}

TEST_CASE("a contour near the previous box is adopted") {
  const SensorGeometry g{240, 180};
  AtslTdFrame frame = blank_frame(g);
  draw_ring(frame, 42, 42, 20);
  TrackState state = TrackState::init({40, 40, 20, 20});
  step(state, frame, TrackerConfig{}, DetectorConfig{}, 1);
  CHECK(state.mode == TrackMode::Tracking);
  CHECK(state.current == BoundingBox{42, 42, 20, 20});
  CHECK(state.last_confident == state.current);
  REQUIRE(state.history.size() == 2);  // init record plus this step
  CHECK(state.history.back().iou_prev > 0.3);
}

TEST_CASE("low overlap with the previous box fails into recovery") {
  const SensorGeometry g{240, 180};
  AtslTdFrame frame = blank_frame(g);
  draw_ring(frame, 56, 56, 20);  // refine passes, IoU vs prev ~0.02
  TrackState state = TrackState::init({40, 40, 20, 20});
  TrackerConfig cfg;
  cfg.tau = 3.0;
  step(state, frame, cfg, DetectorConfig{}, 1);
  CHECK(state.mode == TrackMode::Recovering);
  CHECK(state.current == BoundingBox{40, 40, 20, 20});  // held
  CHECK(state.history.back().mode == TrackMode::Recovering);
}

TEST_CASE("empty refined set is the failure path, not an error") {
  const SensorGeometry g{240, 180};
  TrackState state = TrackState::init({40, 40, 20, 20});
  step(state, blank_frame(g), TrackerConfig{}, DetectorConfig{}, 1);
  CHECK(state.mode == TrackMode::Recovering);
  CHECK(state.current == BoundingBox{40, 40, 20, 20});
  CHECK(state.history.back().iou_prev == 0.0);
}

TEST_CASE("argmax picks the candidate with the larger previous-box overlap") {
  const SensorGeometry g{240, 180};
  AtslTdFrame frame = blank_frame(g);
  draw_ring(frame, 40, 40, 20);  // IoU 1.0 vs prev
  draw_ring(frame, 64, 40, 20);  // disjoint from prev
  TrackState state = TrackState::init({40, 40, 20, 20});
  TrackerConfig cfg;
  cfg.tau = 4.0;
  step(state, frame, cfg, DetectorConfig{}, 1);
  CHECK(state.mode == TrackMode::Tracking);
  CHECK(state.current == BoundingBox{40, 40, 20, 20});
}

TEST_CASE("recovery resumes when a matching contour reappears") {
  const SensorGeometry g{240, 180};
  TrackState state = TrackState::init({40, 40, 20, 20});
  step(state, blank_frame(g), TrackerConfig{}, DetectorConfig{}, 1);
  REQUIRE(state.mode == TrackMode::Recovering);

  // First recovery region is the box grown 1.5x about its center: [35,65)^2.
  // A ring at (44,43) spans to (63,62) and so sits fully inside it.
  AtslTdFrame frame = blank_frame(g);
  draw_ring(frame, 44, 43, 20);
  recover_step(state, frame, TrackerConfig{}, DetectorConfig{}, 2);
  CHECK(state.mode == TrackMode::Tracking);
  CHECK(state.current == BoundingBox{44, 43, 20, 20});
  CHECK(state.frames_in_recovery == 0);
}

TEST_CASE("recovery region growth eventually reaches a distant contour") {
  const SensorGeometry g{240, 180};
  TrackState state = TrackState::init({20, 20, 20, 20});
  step(state, blank_frame(g), TrackerConfig{}, DetectorConfig{}, 1);
  REQUIRE(state.mode == TrackMode::Recovering);

  AtslTdFrame far = blank_frame(g);
  draw_ring(far, 180, 140, 20);
  int frames_needed = 0;
  for (int i = 2; i <= 12 && state.mode == TrackMode::Recovering; ++i) {
    recover_step(state, far, TrackerConfig{}, DetectorConfig{}, i);
    ++frames_needed;
  }
  CHECK(state.mode == TrackMode::Tracking);
  CHECK(state.current == BoundingBox{180, 140, 20, 20});
  CHECK(frames_needed <= 10);  // growth clips at the full sensor and stays there
}

TEST_CASE("indefinite recovery is legal and visible in history") {
  const SensorGeometry g{240, 180};
  TrackState state = TrackState::init({20, 20, 20, 20});
  for (int i = 1; i <= 10; ++i) advance(state, blank_frame(g), TrackerConfig{}, DetectorConfig{}, i);
  CHECK(state.mode == TrackMode::Recovering);
  CHECK(state.current == BoundingBox{20, 20, 20, 20});
  CHECK(state.history.size() == 11);  // init record plus ten advances
  CHECK(state.history.front().mode == TrackMode::Tracking);
  for (std::size_t i = 1; i < state.history.size(); ++i)
    CHECK(state.history[i].mode == TrackMode::Recovering);
}

TEST_CASE("an unreachable resume score never resumes") {
  const SensorGeometry g{240, 180};
  TrackerConfig cfg;
  cfg.recovery_resume_score = 1.01;
  TrackState state = TrackState::init({40, 40, 20, 20});
  step(state, blank_frame(g), cfg, DetectorConfig{}, 1);
  REQUIRE(state.mode == TrackMode::Recovering);
  AtslTdFrame frame = blank_frame(g);
  draw_ring(frame, 42, 42, 20);  // perfect candidate, refine score 1.0
  for (int i = 2; i <= 6; ++i) recover_step(state, frame, cfg, DetectorConfig{}, i);
  CHECK(state.mode == TrackMode::Recovering);
  CHECK(state.current == BoundingBox{40, 40, 20, 20});
}

TEST_CASE("run_tracker history covers every frame once") {
  const SensorGeometry g{240, 180};
  std::vector<AtslTdFrame> frames;
  for (int i = 0; i < 5; ++i) {
    AtslTdFrame f = blank_frame(g);
    draw_ring(f, 40 + 2 * i, 40, 20);
    frames.push_back(std::move(f));
  }
  const TrackState state = run_tracker(frames, {40, 40, 20, 20}, TrackerConfig{}, DetectorConfig{});
  REQUIRE(state.history.size() == frames.size());
  for (std::size_t i = 0; i < state.history.size(); ++i)
    CHECK(state.history[i].frame_index == static_cast<std::int64_t>(i));
  CHECK(state.history[0].box == BoundingBox{40, 40, 20, 20});
  CHECK(state.current == BoundingBox{48, 40, 20, 20});
}

TEST_CASE("zero events produce no frames and no history") {
  PipelineConfig cfg;
  cfg.interval = {0.5, 0.6, 0.05};
  const TrackStreamResult result =
      track_stream({}, SensorGeometry{240, 180}, {40, 40, 20, 20}, cfg, TrackerConfig{},
                   DetectorConfig{});
  CHECK(result.frames.empty());
  CHECK(result.state.history.empty());
}

TEST_CASE("adaptive conversion cuts on the entropy band and is replay identical") {
  const SensorGeometry g{240, 180};
  SceneScript script;
  script.geometry = g;
  script.duration = 1'000'000;
  script.seed = 5;
  script.shapes.push_back(SceneScript::rectangle(
      30, 30, {{0, 60, 60}, {1'000'000, 140, 120}}, 4.0));
  const SynthResult synth = generate(script);
  REQUIRE(synth.events.size() > 1000);

  // calibrate the band from fixed-window frames of the same stream
  CalibrationSet samples;
  for (const AtslTdFrame& f : convert_fixed_time_window(synth.events, g, 30'000)) {
    const auto value = frame_nzge(f, GridSpec::for_geometry(g, 4));
    if (value) samples.add(*value);
  }
  REQUIRE(samples.size() >= 10);
  PipelineConfig cfg;
  cfg.grid = GridSpec::for_geometry(g, 4);
  cfg.interval = calibrate_interval(samples, 0.05);
  cfg.check_cadence = 32;

  const auto frames = convert_adaptive(synth.events, g, cfg);
  CHECK(frames.size() >= 10);
  for (const AtslTdFrame& f : frames) {
    // the cut decision comes from the incremental monitor, so the exact
    // value recorded on the frame can sit a hair under the bound
    CHECK(f.nzge_at_cut >= 0.95 * cfg.interval.alpha);
    CHECK(f.end_time > f.start_time);
  }
  // frames tile the stream: each starts where the previous ended
  for (std::size_t i = 1; i < frames.size(); ++i)
    CHECK(frames[i].start_time == frames[i - 1].end_time);

  const auto replay = convert_adaptive(synth.events, g, cfg);
  REQUIRE(replay.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK((replay[i].on == frames[i].on).all());
    CHECK((replay[i].off == frames[i].off).all());
    CHECK(replay[i].nzge_at_cut == frames[i].nzge_at_cut);
  }
}

TEST_CASE("a frame-duration cap cuts frames that never reach the band") {
  const SensorGeometry g{240, 180};
  // two slow pixels: far too little structure to reach any sane band
  std::vector<Event> events;
  for (int i = 0; i < 100; ++i)
    events.push_back({10 + (i % 2), 10, Polarity::On, static_cast<Timestamp>(i) * 1000});
  PipelineConfig cfg;
  cfg.grid = GridSpec::for_geometry(g, 4);
  cfg.interval = {5.0, 6.0, 0.05};  // unreachable on purpose
  cfg.check_cadence = 8;
  CHECK(convert_adaptive(events, g, cfg).empty());

  cfg.max_open_frame_us = 20'000;
  const auto frames = convert_adaptive(events, g, cfg);
  CHECK(frames.size() >= 4);
}
