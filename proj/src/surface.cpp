#include "atsltd/surface.hpp"

#include <string>

namespace atsltd {

Surface::Surface(SensorGeometry geometry, Timestamp frame_start)
    : geometry_(geometry), frame_start_(frame_start), last_event_(frame_start) {
  if (geometry_.width <= 0 || geometry_.height <= 0)
    throw ConfigError("sensor geometry must be positive");
  on_ = TimePlane::Constant(geometry_.height, geometry_.width, kPixelUnset);
  off_ = TimePlane::Constant(geometry_.height, geometry_.width, kPixelUnset);
}

void Surface::apply_event(const Event& e) {
  if (e.t < last_event_)
    throw OrderingError("event at " + std::to_string(e.t) +
                        " us precedes surface time " + std::to_string(last_event_) + " us");
  if (!geometry_.contains(e.u, e.v))
    throw BoundsError("event (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                      ") outside sensor");
  TimePlane& plane = e.p == Polarity::On ? on_ : off_;
  plane(e.v, e.u) = e.t;
  last_event_ = e.t;
  ++event_count_;
}

std::uint8_t decay_value(Timestamp set_time, Timestamp last_event, Timestamp frame_start) {
  // Times are frame relative with a 1 us epsilon, so a frame whose first
  // event lands on its own start time still divides cleanly.
  const std::int64_t s = set_time - frame_start + 1;
  const std::int64_t l = last_event - frame_start + 1;
  const std::int64_t n = 255 * s;
  // round(n / l), half away from zero; everything here is positive
  return static_cast<std::uint8_t>((2 * n + l) / (2 * l));
}

std::uint8_t Surface::render_intensity(std::int32_t u, std::int32_t v,
                                       Polarity channel) const {
  if (!geometry_.contains(u, v)) throw BoundsError("pixel outside sensor");
  const Timestamp set_time = (channel == Polarity::On ? on_ : off_)(v, u);
  if (set_time == kPixelUnset) return 0;
  return decay_value(set_time, last_event_, frame_start_);
}

IntensityPlane Surface::render(Polarity channel) const {
  const TimePlane& plane = channel == Polarity::On ? on_ : off_;
  IntensityPlane out(geometry_.height, geometry_.width);
  for (Eigen::Index c = 0; c < plane.cols(); ++c)
    for (Eigen::Index r = 0; r < plane.rows(); ++r) {
      const Timestamp set_time = plane(r, c);
      out(r, c) = set_time == kPixelUnset
                      ? std::uint8_t{0}
                      : decay_value(set_time, last_event_, frame_start_);
    }
  return out;
}

AtslTdFrame Surface::finalize_frame() {
  if (event_count_ == 0) throw Error("cannot finalize an empty frame");
  AtslTdFrame frame;
  frame.geometry = geometry_;
  frame.on = render(Polarity::On);
  frame.off = render(Polarity::Off);
  frame.start_time = frame_start_;
  // Frames span at least one microsecond; a frame whose only events share the
  // start timestamp still needs end > start.
  frame.end_time = std::max(last_event_, frame_start_ + 1);
  frame.event_count = event_count_;

  frame_start_ = frame.end_time;
  last_event_ = frame_start_;
  event_count_ = 0;
  on_.setConstant(kPixelUnset);
  off_.setConstant(kPixelUnset);
  return frame;
}

std::vector<AtslTdFrame> convert_fixed_time_window(const std::vector<Event>& events,
                                                   SensorGeometry geometry,
                                                   Timestamp window_us) {
  if (window_us <= 0) throw ConfigError("time window must be positive");
  std::vector<AtslTdFrame> frames;
  if (events.empty()) return frames;

  Timestamp window_start = events.front().t;
  Timestamp window_end = window_start + window_us;
  Surface surface(geometry, window_start);

  auto flush = [&] {
    if (surface.empty()) return;
    AtslTdFrame frame;
    frame.geometry = geometry;
    frame.on = surface.render(Polarity::On);
    frame.off = surface.render(Polarity::Off);
    frame.start_time = window_start;
    frame.end_time = window_end;
    frame.event_count = surface.event_count();
    frames.push_back(std::move(frame));
  };

  for (const Event& e : events) {
    if (e.t >= window_end) {
      flush();
      // jump over empty windows in one step, keeping the anchor alignment
      const Timestamp skipped = (e.t - window_start) / window_us;
      window_start += skipped * window_us;
      window_end = window_start + window_us;
      surface = Surface(geometry, window_start);
    }
    surface.apply_event(e);
  }
  flush();
  return frames;
}

}  // namespace atsltd
