#include "atsltd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace atsltd {

namespace {

// 53 uniform bits in [0, 1); identical across platforms for a given seed.
double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

// Deterministic tick schedule at 1.25x the target rate, thinned with keep
// probability 0.8, so the expected rate matches while tick times stay off the
// obvious lattice.
constexpr double kOversample = 1.25;
constexpr double kKeepProb = 0.8;

struct Edge {
  double ax, ay;  // start vertex, shape frame
  double ex, ey;  // edge vector
  double length;
  double nx, ny;  // outward unit normal
};

std::vector<Edge> shape_edges(const MovingShape& shape) {
  std::vector<Edge> edges;
  const std::size_t n = shape.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [ax, ay] = shape.vertices[i];
    const auto& [bx, by] = shape.vertices[(i + 1) % n];
    Edge e{ax, ay, bx - ax, by - ay, 0.0, 0.0, 0.0};
    e.length = std::hypot(e.ex, e.ey);
    if (e.length <= 0.0) throw ConfigError("zero-length polygon edge");
    // counter-clockwise winding on screen (y down): outward is (-ey, ex)
    e.nx = -e.ey / e.length;
    e.ny = e.ex / e.length;
    edges.push_back(e);
  }
  return edges;
}

void validate(const SceneScript& script) {
  if (script.duration < 0) throw ConfigError("negative scene duration");
  if (script.noise_rate < 0.0) throw ConfigError("negative noise rate");
  for (const MovingShape& shape : script.shapes) {
    if (shape.vertices.size() < 3) throw ConfigError("shape needs at least 3 vertices");
    if (shape.trajectory.empty()) throw ConfigError("shape has no trajectory");
    if (shape.events_per_px < 0.0) throw ConfigError("negative event density");
    for (std::size_t i = 1; i < shape.trajectory.size(); ++i)
      if (shape.trajectory[i].t <= shape.trajectory[i - 1].t)
        throw ConfigError("trajectory times must strictly increase");
    for (const TrajectoryPoint& p : shape.trajectory)
      if (p.t < 0) throw ConfigError("negative trajectory time");
    // the shape bbox moves linearly between waypoints, so staying at least
    // partially on-sensor at every waypoint covers the whole path
    double vx0 = shape.vertices[0].first, vx1 = vx0;
    double vy0 = shape.vertices[0].second, vy1 = vy0;
    for (const auto& [vx, vy] : shape.vertices) {
      vx0 = std::min(vx0, vx);
      vx1 = std::max(vx1, vx);
      vy0 = std::min(vy0, vy);
      vy1 = std::max(vy1, vy);
    }
    for (const TrajectoryPoint& p : shape.trajectory)
      if (p.x + vx1 <= 0.0 || p.x + vx0 >= script.geometry.width ||
          p.y + vy1 <= 0.0 || p.y + vy0 >= script.geometry.height)
        throw ConfigError("trajectory leaves the sensor entirely");
  }
}

Timestamp effective_duration(const SceneScript& script) {
  Timestamp end = script.duration;
  for (const MovingShape& shape : script.shapes)
    end = std::max(end, shape.trajectory.back().t);
  return end;
}

BoundingBox shape_bounds(const MovingShape& shape) {
  double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
  double miny = minx, maxy = maxx;
  for (const auto& [vx, vy] : shape.vertices) {
    minx = std::min(minx, vx);
    maxx = std::max(maxx, vx);
    miny = std::min(miny, vy);
    maxy = std::max(maxy, vy);
  }
  return {minx, miny, maxx - minx, maxy - miny};
}

struct TrajectorySample {
  double x, y;
};

TrajectorySample sample_trajectory(const std::vector<TrajectoryPoint>& traj, Timestamp t) {
  if (t <= traj.front().t) return {traj.front().x, traj.front().y};
  if (t >= traj.back().t) return {traj.back().x, traj.back().y};
  auto it = std::upper_bound(traj.begin(), traj.end(), t,
                             [](Timestamp v, const TrajectoryPoint& p) { return v < p.t; });
  const TrajectoryPoint& b = *it;
  const TrajectoryPoint& a = *(it - 1);
  const double f = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

}  // namespace

MovingShape SceneScript::rectangle(double width, double height,
                                   std::vector<TrajectoryPoint> trajectory,
                                   double events_per_px) {
  if (width <= 0.0 || height <= 0.0) throw ConfigError("rectangle sides must be positive");
  MovingShape s;
  const double hw = 0.5 * width, hh = 0.5 * height;
  s.vertices = {{-hw, -hh}, {-hw, hh}, {hw, hh}, {hw, -hh}};
  s.trajectory = std::move(trajectory);
  s.events_per_px = events_per_px;
  return s;
}

SynthResult generate(const SceneScript& script) {
  validate(script);
  SynthResult result;
  std::mt19937_64 rng(script.seed);
  const Timestamp scene_end = effective_duration(script);

  int object_id = 0;
  for (const MovingShape& shape : script.shapes) {
    const std::vector<Edge> edges = shape_edges(shape);
    const auto& traj = shape.trajectory;

    for (std::size_t seg = 0; seg + 1 < traj.size(); ++seg) {
      const TrajectoryPoint& a = traj[seg];
      const TrajectoryPoint& b = traj[seg + 1];
      const Timestamp seg_end = script.duration > 0 ? std::min(b.t, script.duration) : b.t;
      if (seg_end <= a.t) continue;
      const double dt_s = static_cast<double>(b.t - a.t) / kMicrosPerSecond;
      const double vx = (b.x - a.x) / dt_s;
      const double vy = (b.y - a.y) / dt_s;

      for (const Edge& edge : edges) {
        const double normal_speed = vx * edge.nx + vy * edge.ny;
        if (normal_speed == 0.0) continue;
        const Polarity polarity = normal_speed > 0.0 ? Polarity::On : Polarity::Off;
        const double rate = shape.events_per_px * edge.length * std::abs(normal_speed);
        if (rate <= 0.0) continue;
        const double tick_us = kMicrosPerSecond / (rate * kOversample);

        for (std::int64_t j = 0;; ++j) {
          const Timestamp t =
              a.t + static_cast<Timestamp>(std::llround((j + 0.5) * tick_us));
          if (t >= seg_end) break;
          if (uniform01(rng) >= kKeepProb) continue;
          const TrajectorySample c = sample_trajectory(traj, t);
          const double xi = uniform01(rng);
          const double px = c.x + edge.ax + xi * edge.ex;
          const double py = c.y + edge.ay + xi * edge.ey;
          const auto u = static_cast<std::int32_t>(std::lround(px));
          const auto v = static_cast<std::int32_t>(std::lround(py));
          if (!script.geometry.contains(u, v)) continue;
          result.events.push_back({u, v, polarity, t});
        }
      }
    }

    // analytic ground truth at 1 kHz, clipped to the sensor
    GroundTruthTrack track;
    track.object_id = object_id++;
    const BoundingBox bounds = shape_bounds(shape);
    const Timestamp t0 = traj.front().t;
    const Timestamp t1 = script.duration > 0 ? std::min(traj.back().t, script.duration)
                                             : traj.back().t;
    for (Timestamp t = t0;; t += 1000) {
      const bool last = t >= t1;
      const Timestamp ts = last ? t1 : t;
      const TrajectorySample c = sample_trajectory(traj, ts);
      const BoundingBox box = clip_to_sensor(
          {bounds.x + c.x, bounds.y + c.y, bounds.w, bounds.h}, script.geometry);
      if (box.valid()) track.entries.push_back({ts, box});
      if (last) break;
    }
    result.tracks.push_back(std::move(track));
  }

  if (script.noise_rate > 0.0 && scene_end > 0) {
    const double span_s = static_cast<double>(scene_end) / kMicrosPerSecond;
    const auto count = static_cast<std::int64_t>(std::llround(script.noise_rate * span_s));
    for (std::int64_t i = 0; i < count; ++i) {
      const auto t = static_cast<Timestamp>(uniform01(rng) * static_cast<double>(scene_end));
      const auto u = static_cast<std::int32_t>(uniform01(rng) * script.geometry.width);
      const auto v = static_cast<std::int32_t>(uniform01(rng) * script.geometry.height);
      const Polarity p = uniform01(rng) < 0.5 ? Polarity::Off : Polarity::On;
      result.events.push_back({std::min(u, script.geometry.width - 1),
                               std::min(v, script.geometry.height - 1), p,
                               std::min(t, scene_end - 1)});
    }
  }

  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return result;
}

SceneScript parse_script(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("scene script is not valid JSON: ") + e.what());
  }
  try {
    SceneScript script;
    if (j.contains("geometry")) {
      script.geometry.width = j["geometry"].at("width").get<int>();
      script.geometry.height = j["geometry"].at("height").get<int>();
    }
    if (j.contains("duration_s"))
      script.duration = static_cast<Timestamp>(
          std::llround(j["duration_s"].get<double>() * kMicrosPerSecond));
    script.seed = j.value("seed", std::uint64_t{0});
    script.noise_rate = j.value("noise_rate", 0.0);

    for (const auto& js : j.value("shapes", nlohmann::json::array())) {
      MovingShape shape;
      std::vector<TrajectoryPoint> traj;
      for (const auto& jp : js.at("trajectory")) {
        TrajectoryPoint p;
        p.t = static_cast<Timestamp>(std::llround(jp.at("t").get<double>() * kMicrosPerSecond));
        p.x = jp.at("x").get<double>();
        p.y = jp.at("y").get<double>();
        traj.push_back(p);
      }
      const double density = js.value("events_per_px", 1.0);
      const std::string type = js.value("type", "polygon");
      if (type == "rectangle") {
        shape = SceneScript::rectangle(js.at("width").get<double>(),
                                       js.at("height").get<double>(), std::move(traj), density);
      } else if (type == "polygon") {
        for (const auto& jv : js.at("vertices"))
          shape.vertices.emplace_back(jv.at(0).get<double>(), jv.at(1).get<double>());
        shape.trajectory = std::move(traj);
        shape.events_per_px = density;
      } else {
        throw FormatError("unknown shape type: " + type);
      }
      script.shapes.push_back(std::move(shape));
    }
    validate(script);
    return script;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad scene script field: ") + e.what());
  }
}

SceneScript load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene script: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_script(buffer.str());
}

}  // namespace atsltd
