#include "atsltd/image_io.hpp"

#include <cmath>
#include <fstream>

#include "atsltd/errors.hpp"

namespace atsltd {

void write_pgm(const std::string& path, const IntensityPlane& plane) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "P5\n" << plane.cols() << " " << plane.rows() << "\n255\n";
  // Eigen defaults to column-major storage; emit rows explicitly
  std::vector<std::uint8_t> row(static_cast<std::size_t>(plane.cols()));
  for (Eigen::Index r = 0; r < plane.rows(); ++r) {
    for (Eigen::Index c = 0; c < plane.cols(); ++c) row[c] = plane(r, c);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("short write: " + path);
}

namespace {

int read_pnm_token(std::istream& in, const std::string& path) {
  // whitespace and '#' comments separate header tokens
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) throw FormatError("truncated header: " + path);
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw FormatError("malformed header: " + path);
  return value;
}

}  // namespace

IntensityPlane read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw FormatError("not a binary PGM: " + path);
  const int width = read_pnm_token(in, path);
  const int height = read_pnm_token(in, path);
  const int maxval = read_pnm_token(in, path);
  if (maxval != 255) throw FormatError("unsupported maxval: " + path);
  IntensityPlane plane(height, width);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width));
  for (int r = 0; r < height; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), width);
    if (!in) throw FormatError("truncated pixel data: " + path);
    for (int c = 0; c < width; ++c) plane(r, c) = row[c];
  }
  return plane;
}

void write_ppm(const std::string& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
  if (!out) throw Error("short write: " + path);
}

RgbImage compose_frame(const AtslTdFrame& frame) {
  RgbImage img = RgbImage::black(static_cast<int>(frame.on.cols()),
                                 static_cast<int>(frame.on.rows()));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * img.width + x);
      img.data[i] = frame.on(y, x);
      img.data[i + 1] = frame.off(y, x);
    }
  return img;
}

void draw_box(RgbImage& image, const BoundingBox& box, const std::array<std::uint8_t, 3>& rgb,
              bool dashed) {
  const int x0 = static_cast<int>(std::lround(box.x));
  const int y0 = static_cast<int>(std::lround(box.y));
  const int x1 = static_cast<int>(std::lround(box.x2())) - 1;
  const int y1 = static_cast<int>(std::lround(box.y2())) - 1;
  if (x1 < x0 || y1 < y0) return;
  const auto pen = [&](int x, int y, int phase) {
    if (dashed && (phase / 3) % 2 == 1) return;
    image.set(x, y, rgb);
  };
  for (int x = x0; x <= x1; ++x) {
    pen(x, y0, x - x0);
    pen(x, y1, x - x0);
  }
  for (int y = y0; y <= y1; ++y) {
    pen(x0, y, y - y0);
    pen(x1, y, y - y0);
  }
}

}  // namespace atsltd
