#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "atsltd/errors.hpp"
#include "atsltd/event.hpp"

namespace atsltd {

using TimePlane = Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntensityPlane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Sentinel for a pixel that has not fired within the current frame.
constexpr std::int64_t kPixelUnset = -1;

// A finalized two-channel frame. Intensities encode event recency: the newest
// event renders 255 and older ones decay linearly toward 0.
struct AtslTdFrame {
  SensorGeometry geometry;
  IntensityPlane on;   // height x width
  IntensityPlane off;  // height x width
  Timestamp start_time = 0;
  Timestamp end_time = 0;
  std::int64_t event_count = 0;
  double nzge_at_cut = 0.0;
};

// In-progress two-channel accumulator. Stores per-pixel last-fire times and
// renders the linear decay lazily: the per-event decay factors t_{k-1}/t_k
// telescope, so a pixel set at time s renders round(255 * s'/L') where s'
// and L' are measured from the frame start (plus 1 us so a frame that opens
// at its own first event never divides by zero). Rounding is half away from
// zero, applied once at render time.
class Surface {
 public:
  explicit Surface(SensorGeometry geometry, Timestamp frame_start = 0);

  // Records the event. Throws OrderingError if e.t precedes the last event,
  // BoundsError if (u, v) is outside the sensor.
  void apply_event(const Event& e);

  // Rendered intensity of one pixel; 0 for never-set pixels.
  std::uint8_t render_intensity(std::int32_t u, std::int32_t v, Polarity channel) const;

  // Renders a full channel plane.
  IntensityPlane render(Polarity channel) const;

  // Emits the rendered frame (end_time = last event time) and resets this
  // surface so the next frame starts where the emitted one ended. Throws
  // Error if no event has been applied. nzge_at_cut is left 0; callers that
  // cut on entropy fill it in.
  AtslTdFrame finalize_frame();

  const SensorGeometry& geometry() const { return geometry_; }
  Timestamp frame_start() const { return frame_start_; }
  Timestamp last_event_time() const { return last_event_; }
  std::int64_t event_count() const { return event_count_; }
  bool empty() const { return event_count_ == 0; }

  const TimePlane& plane(Polarity channel) const {
    return channel == Polarity::On ? on_ : off_;
  }

 private:
  SensorGeometry geometry_;
  TimePlane on_;   // last-fire time per pixel, kPixelUnset when clean
  TimePlane off_;
  Timestamp frame_start_ = 0;
  Timestamp last_event_ = 0;
  std::int64_t event_count_ = 0;
};

// round(255 * set'/last') with frame-relative, epsilon-offset times and
// half-away-from-zero rounding, in exact integer arithmetic.
std::uint8_t decay_value(Timestamp set_time, Timestamp last_event, Timestamp frame_start);

// Fixed-time-window conversion (comparison baseline). Windows are anchored at
// the first event; the same decay rendering applies within each window. Empty
// windows emit nothing; a non-empty trailing window is flushed at end of
// stream. Frame start/end times are the window boundaries.
std::vector<AtslTdFrame> convert_fixed_time_window(const std::vector<Event>& events,
                                                   SensorGeometry geometry,
                                                   Timestamp window_us);

}  // namespace atsltd
