#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "atsltd/event_io.hpp"

namespace atsltd {

// A point on a piecewise-linear trajectory (shape center position).
struct TrajectoryPoint {
  Timestamp t = 0;
  double x = 0.0;
  double y = 0.0;
};

enum class PolarityRule {
  kLeadingOnTrailingOff,  // edges advancing along their outward normal fire On
};

// A moving closed outline. A rectangle is stored as its polygon. Vertices are
// relative to the trajectory position and must wind counter-clockwise in
// image coordinates (y down) for outward normals to point outward.
struct MovingShape {
  std::vector<std::pair<double, double>> vertices;
  std::vector<TrajectoryPoint> trajectory;
  double events_per_px = 1.0;  // contour event density (events per swept pixel)
  PolarityRule polarity_rule = PolarityRule::kLeadingOnTrailingOff;
};

struct SceneScript {
  SensorGeometry geometry;
  Timestamp duration = 0;
  std::vector<MovingShape> shapes;
  double noise_rate = 0.0;  // uniform background events per second
  std::uint64_t seed = 0;

  static MovingShape rectangle(double width, double height,
                               std::vector<TrajectoryPoint> trajectory,
                               double events_per_px = 1.0);
};

struct SynthResult {
  std::vector<Event> events;             // time sorted
  std::vector<GroundTruthTrack> tracks;  // analytic boxes sampled at 1 kHz
};

// Ideal edge events: each polygon edge fires at a rate proportional to its
// length times the normal component of its velocity, with the position along
// the edge and a thinning step drawn from a seeded generator. A static shape
// emits nothing. Identical scripts and seeds give identical output.
SynthResult generate(const SceneScript& script);

// JSON script file; see README for the schema.
SceneScript load_script(const std::string& path);
SceneScript parse_script(const std::string& json_text);

}  // namespace atsltd
