#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "atsltd/image_io.hpp"
#include "atsltd/results_io.hpp"

using namespace atsltd;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "atsltd_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

IntensityPlane random_plane(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, 255);
  IntensityPlane plane(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) plane(y, x) = static_cast<std::uint8_t>(level(rng));
  return plane;
}

}  // namespace

TEST_CASE("pgm survives a write/read round trip") {
  const auto path = (temp_dir() / "roundtrip.pgm").string();
  const IntensityPlane plane = random_plane(24, 32, 7);
  write_pgm(path, plane);
  const IntensityPlane back = read_pgm(path);
  REQUIRE(back.rows() == plane.rows());
  REQUIRE(back.cols() == plane.cols());
  CHECK((back == plane).all());
}

TEST_CASE("reading a missing pgm reports an error") {
  CHECK_THROWS_AS(read_pgm((temp_dir() / "does_not_exist.pgm").string()), Error);
}

TEST_CASE("ppm header and payload layout") {
  const auto path = (temp_dir() / "layout.ppm").string();
  RgbImage img = RgbImage::black(3, 2);
  img.set(0, 0, {255, 0, 0});
  img.set(2, 1, {0, 128, 64});
  write_ppm(path, img);

  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P6");
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(maxval == 255);
  in.get();  // single whitespace after maxval
  std::vector<char> payload(3 * 3 * 2);
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  CHECK(in.gcount() == static_cast<std::streamsize>(payload.size()));
  CHECK(static_cast<std::uint8_t>(payload[0]) == 255);
  CHECK(static_cast<std::uint8_t>(payload[payload.size() - 2]) == 128);
}

TEST_CASE("composites put the On channel in red and Off in green") {
  AtslTdFrame frame;
  frame.geometry = {4, 3};
  frame.on = IntensityPlane::Zero(3, 4);
  frame.off = IntensityPlane::Zero(3, 4);
  frame.on(1, 2) = 200;
  frame.off(2, 0) = 90;
  const RgbImage img = compose_frame(frame);
  REQUIRE(img.width == 4);
  REQUIRE(img.height == 3);
  const auto px = [&](int x, int y, int c) { return img.data[3 * (y * img.width + x) + c]; };
  CHECK(px(2, 1, 0) == 200);
  CHECK(px(2, 1, 1) == 0);
  CHECK(px(0, 2, 1) == 90);
  CHECK(px(0, 2, 0) == 0);
  CHECK(px(3, 0, 0) == 0);
  CHECK(px(3, 0, 2) == 0);
}

TEST_CASE("solid box outlines every perimeter pixel, dashed skips some") {
  RgbImage solid = RgbImage::black(20, 20);
  draw_box(solid, {4, 4, 8, 8}, {255, 255, 0});
  const auto lit = [](const RgbImage& img, int x, int y) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * img.width + x);
    return img.data[i] != 0 || img.data[i + 1] != 0 || img.data[i + 2] != 0;
  };
  int solid_count = 0;
  for (int x = 4; x < 12; ++x) {
    CHECK(lit(solid, x, 4));
    CHECK(lit(solid, x, 11));
  }
  for (int y = 4; y < 12; ++y) {
    CHECK(lit(solid, 4, y));
    CHECK(lit(solid, 11, y));
  }
  CHECK_FALSE(lit(solid, 6, 6));  // interior untouched
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) solid_count += lit(solid, x, y) ? 1 : 0;

  RgbImage dashed = RgbImage::black(20, 20);
  draw_box(dashed, {4, 4, 8, 8}, {255, 255, 0}, true);
  int dashed_count = 0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) dashed_count += lit(dashed, x, y) ? 1 : 0;
  CHECK(dashed_count > 0);
  CHECK(dashed_count < solid_count);
}

TEST_CASE("boxes partially outside the image clip instead of crashing") {
  RgbImage img = RgbImage::black(10, 10);
  draw_box(img, {-5, -5, 8, 8}, {10, 20, 30});
  draw_box(img, {7, 7, 20, 20}, {10, 20, 30}, true);
  CHECK(img.width == 10);
}

TEST_CASE("results csv round trips with microsecond precision") {
  std::vector<ResultRow> rows;
  rows.push_back({0, 0, 3'811, 0, {40.5, 75.25, 30.0, 30.0}, 0.0, TrackMode::Tracking});
  rows.push_back({1, 3'811, 29'999'999, 2, {41.0, 76.0, 30.0, 31.0}, 0.874512, TrackMode::Recovering});

  std::ostringstream out;
  write_results(out, rows);
  const std::string text = out.str();
  CHECK(text.find("frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode") == 0);
  CHECK(text.find("0.003811") != std::string::npos);
  CHECK(text.find("29.999999") != std::string::npos);
  CHECK(text.find("tracking") != std::string::npos);
  CHECK(text.find("recovering") != std::string::npos);

  std::istringstream in(text);
  const std::vector<ResultRow> back = parse_results(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].frame_index == rows[i].frame_index);
    CHECK(back[i].t_start == rows[i].t_start);
    CHECK(back[i].t_end == rows[i].t_end);
    CHECK(back[i].object_id == rows[i].object_id);
    CHECK(back[i].box == rows[i].box);
    CHECK(back[i].iou_prev == doctest::Approx(rows[i].iou_prev));
    CHECK(back[i].mode == rows[i].mode);
  }
}

TEST_CASE("malformed results rows carry a line number") {
  std::istringstream in(
      "frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode\n"
      "0,0.0,0.01,0,1,2,3,4,0.5,tracking\n"
      "not a row\n");
  try {
    parse_results(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("history rows carry the frame times alongside each step") {
  AtslTdFrame a;
  a.geometry = {16, 16};
  a.on = IntensityPlane::Zero(16, 16);
  a.off = IntensityPlane::Zero(16, 16);
  a.start_time = 0;
  a.end_time = 10'000;
  AtslTdFrame b = a;
  b.start_time = 10'000;
  b.end_time = 25'000;

  TrackState state = TrackState::init({2, 2, 5, 5});
  state.history.push_back({1, {3, 2, 5, 5}, 0.8, TrackMode::Tracking});

  const std::vector<ResultRow> rows = rows_from_history(state, {a, b}, 9);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].frame_index == 0);
  CHECK(rows[0].t_start == 0);
  CHECK(rows[0].t_end == 10'000);
  CHECK(rows[0].object_id == 9);
  CHECK(rows[0].box == BoundingBox{2, 2, 5, 5});
  CHECK(rows[1].frame_index == 1);
  CHECK(rows[1].t_start == 10'000);
  CHECK(rows[1].t_end == 25'000);
  CHECK(rows[1].iou_prev == doctest::Approx(0.8));
}

TEST_CASE("frame dumps reload byte for byte with their sidecar") {
  const auto dir = temp_dir() / "dump";
  std::filesystem::create_directories(dir);

  AtslTdFrame frame;
  frame.geometry = {32, 24};
  frame.on = random_plane(24, 32, 11);
  frame.off = random_plane(24, 32, 12);
  frame.start_time = 1'234;
  frame.end_time = 56'789;
  frame.event_count = 321;
  frame.nzge_at_cut = 0.875;

  dump_frame(dir.string(), frame, 4);
  CHECK(std::filesystem::exists(dir / "frame_4_on.pgm"));
  CHECK(std::filesystem::exists(dir / "frame_4_off.pgm"));
  CHECK(std::filesystem::exists(dir / "frame_4.json"));

  std::ifstream sidecar(dir / "frame_4.json");
  const nlohmann::json j = nlohmann::json::parse(sidecar);
  CHECK(j["start_time_s"].get<double>() == doctest::Approx(0.001234));
  CHECK(j["end_time_s"].get<double>() == doctest::Approx(0.056789));
  CHECK(j["event_count"].get<std::int64_t>() == 321);
  CHECK(j["nzge_at_cut"].get<double>() == doctest::Approx(0.875));

  const AtslTdFrame back = load_frame_dump(dir.string(), 4);
  CHECK(back.geometry.width == 32);
  CHECK(back.geometry.height == 24);
  CHECK((back.on == frame.on).all());
  CHECK((back.off == frame.off).all());
  CHECK(back.start_time == frame.start_time);
  CHECK(back.end_time == frame.end_time);
  CHECK(back.event_count == frame.event_count);
  CHECK(back.nzge_at_cut == doctest::Approx(frame.nzge_at_cut));
}
