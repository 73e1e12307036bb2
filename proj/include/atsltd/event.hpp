#pragma once

#include <cstdint>

namespace atsltd {

// Timestamps are integer microseconds throughout. Event files carry decimal
// seconds; conversion happens at the I/O boundary so decay arithmetic stays
// exact and replayable.
using Timestamp = std::int64_t;

constexpr Timestamp kMicrosPerSecond = 1'000'000;

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

// One retinal event: pixel (u, v) fired with polarity p at time t.
struct Event {
  std::int32_t u = 0;  // column, 0 <= u < width
  std::int32_t v = 0;  // row,    0 <= v < height
  Polarity p = Polarity::Off;
  Timestamp t = 0;  // microseconds

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::int32_t width = 240;
  std::int32_t height = 180;

  bool contains(std::int32_t u, std::int32_t v) const {
    return u >= 0 && u < width && v >= 0 && v < height;
  }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

inline double to_seconds(Timestamp t) {
  return static_cast<double>(t) / kMicrosPerSecond;
}

}  // namespace atsltd
