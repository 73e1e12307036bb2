#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "atsltd/box.hpp"
#include "atsltd/surface.hpp"

namespace atsltd {

// Interleaved 8-bit RGB image, row major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height

  static RgbImage black(int width, int height) {
    RgbImage img;
    img.width = width;
    img.height = height;
    img.data.assign(static_cast<std::size_t>(3) * width * height, 0);
    return img;
  }

  void set(int x, int y, const std::array<std::uint8_t, 3>& rgb) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    data[i] = rgb[0];
    data[i + 1] = rgb[1];
    data[i + 2] = rgb[2];
  }
};

// Binary PGM (P5), maxval 255.
void write_pgm(const std::string& path, const IntensityPlane& plane);
IntensityPlane read_pgm(const std::string& path);

// Binary PPM (P6), maxval 255.
void write_ppm(const std::string& path, const RgbImage& image);

// Two-channel composite: On intensity in red, Off in green.
RgbImage compose_frame(const AtslTdFrame& frame);

// Axis-aligned box outline. dashed draws alternating 3-on/3-off pixels; used
// to mark frames where the tracker is recovering rather than tracking.
void draw_box(RgbImage& image, const BoundingBox& box, const std::array<std::uint8_t, 3>& rgb,
              bool dashed = false);

}  // namespace atsltd
