#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* env = std::getenv("ATSLTD_BIN");
  REQUIRE_MESSAGE(env != nullptr, "ATSLTD_BIN must point at the cli binary");
  return env;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "atsltd_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd =
      q(binary()) + " " + args + " > " + q(out_path) + " 2> " + q(err_path);
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// diagonal pass of a 30x30 square; trajectory coordinates are centers
const char* kDiagonalScene = R"({
  "geometry": {"width": 240, "height": 180},
  "duration_s": 1.0,
  "seed": 5,
  "shapes": [{
    "type": "rectangle", "width": 30, "height": 30, "events_per_px": 4.0,
    "trajectory": [{"t": 0.0, "x": 60, "y": 60}, {"t": 1.0, "x": 140, "y": 120}]
  }]
})";

const char* kInlineConfig =
    "interval.source = calibrate-inline\n"
    "interval.window_ms = 30\n"
    "pipeline.check_cadence = 32\n";

}  // namespace

TEST_CASE("calibrate reproduces the published interval from summary stats") {
  const fs::path dir = scratch("cal_stats");
  const RunResult r = run_cli("calibrate --stats 0.08795,0.02394,100 --out " + q(dir / "out"), dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("alpha=0.083") != std::string::npos);
  CHECK(r.out.find("beta=0.0927") != std::string::npos);

  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "out" / "calibration.json"));
  CHECK(j["alpha"].get<double>() == doctest::Approx(0.0832).epsilon(1e-3));
  CHECK(j["beta"].get<double>() == doctest::Approx(0.0927).epsilon(1e-3));
  CHECK(j["omega"].get<double>() == 0.05);
  CHECK(j["samples"].get<int>() == 100);
  CHECK(j["log_base"].get<int>() == 2);
  CHECK(j["grid"]["p"].get<int>() == 45);
  CHECK(j["grid"]["q"].get<int>() == 60);
  CHECK(j["grid"]["r"].get<int>() == 4);
}

TEST_CASE("calibrate refuses a single sample") {
  const fs::path dir = scratch("cal_single");
  write_file(dir / "samples.txt", "0.5\n");
  const RunResult r = run_cli("calibrate --samples " + q(dir / "samples.txt") + " --out " +
                                  q(dir / "out"),
                              dir);
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("a stricter omega widens the interval") {
  const fs::path dir = scratch("cal_omega");
  REQUIRE(run_cli("calibrate --stats 0.08795,0.02394,100 --out " + q(dir / "a"), dir).exit_code == 0);
  REQUIRE(run_cli("calibrate --stats 0.08795,0.02394,100 --omega 0.01 --out " + q(dir / "b"), dir)
              .exit_code == 0);
  const nlohmann::json a = nlohmann::json::parse(slurp(dir / "a" / "calibration.json"));
  const nlohmann::json b = nlohmann::json::parse(slurp(dir / "b" / "calibration.json"));
  const double width_05 = a["beta"].get<double>() - a["alpha"].get<double>();
  const double width_01 = b["beta"].get<double>() - b["alpha"].get<double>();
  CHECK(width_01 > width_05);
  CHECK(b["omega"].get<double>() == 0.01);
}

TEST_CASE("fixed window conversion cuts one frame per elapsed window") {
  const fs::path dir = scratch("convert_ftw");
  write_file(dir / "events.txt",
             "0.000000 10 10 1\n"
             "0.004000 11 10 1\n"
             "0.010000 12 10 0\n"
             "0.013000 13 10 1\n"
             "0.020000 14 11 0\n"
             "0.026999 15 11 1\n");
  const RunResult r = run_cli("convert --events " + q(dir / "events.txt") +
                                  " --mode ftw --window-ms 9 --out " + q(dir / "out"),
                              dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("frames=3") != std::string::npos);
  for (int i = 0; i < 3; ++i) {
    CHECK(fs::exists(dir / "out" / ("frame_" + std::to_string(i) + "_on.pgm")));
    CHECK(fs::exists(dir / "out" / ("frame_" + std::to_string(i) + "_off.pgm")));
    CHECK(fs::exists(dir / "out" / ("frame_" + std::to_string(i) + ".json")));
  }
  CHECK_FALSE(fs::exists(dir / "out" / "frame_3_on.pgm"));
}

TEST_CASE("convert rejects an unknown mode") {
  const fs::path dir = scratch("convert_badmode");
  write_file(dir / "events.txt", "0.000000 10 10 1\n");
  const RunResult r = run_cli("convert --events " + q(dir / "events.txt") +
                                  " --mode nonsense --out " + q(dir / "out"),
                              dir);
  CHECK(r.exit_code != 0);
}

TEST_CASE("track without its events file fails and leaves nothing behind") {
  const fs::path dir = scratch("track_missing");
  const RunResult r = run_cli("track --events " + q(dir / "nope.txt") +
                                  " --box 45,45,30,30 --out " + q(dir / "out"),
                              dir);
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("error") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "results.csv"));
}

TEST_CASE("synth, track, eval and render chain end to end") {
  const fs::path dir = scratch("pipeline");
  write_file(dir / "scene.json", kDiagonalScene);
  write_file(dir / "run.cfg", kInlineConfig);

  // synth
  const RunResult synth =
      run_cli("synth --script " + q(dir / "scene.json") + " --out " + q(dir / "data"), dir);
  REQUIRE(synth.exit_code == 0);
  REQUIRE(fs::exists(dir / "data" / "events.txt"));
  REQUIRE(fs::exists(dir / "data" / "gt.csv"));
  CHECK(slurp(dir / "data" / "gt.csv").find("object_id,t,x,y,w,h") == 0);

  // adaptive conversion on its own
  const RunResult convert = run_cli("convert --events " + q(dir / "data" / "events.txt") +
                                        " --mode atsltd --config " + q(dir / "run.cfg") +
                                        " --out " + q(dir / "conv"),
                                    dir);
  REQUIRE(convert.exit_code == 0);
  long converted = 0;
  std::sscanf(convert.out.c_str(), "frames=%ld", &converted);
  CHECK(converted >= 5);

  // track with frame dumps
  const RunResult track = run_cli("track --events " + q(dir / "data" / "events.txt") +
                                      " --box 45,45,30,30 --config " + q(dir / "run.cfg") +
                                      " --dump-frames --out " + q(dir / "trk"),
                                  dir);
  REQUIRE(track.exit_code == 0);
  REQUIRE(fs::exists(dir / "trk" / "results.csv"));
  const std::string results = slurp(dir / "trk" / "results.csv");
  CHECK(results.find("frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode") == 0);
  const auto rows = static_cast<long>(std::count(results.begin(), results.end(), '\n')) - 1;
  CHECK(rows >= 5);
  for (long i = 0; i < rows; ++i) {
    CHECK(fs::exists(dir / "trk" / "frames" / ("frame_" + std::to_string(i) + "_on.pgm")));
    CHECK(fs::exists(dir / "trk" / "frames" / ("frame_" + std::to_string(i) + ".json")));
  }

  // eval against the synthetic ground truth
  const RunResult eval = run_cli("eval --results " + q(dir / "trk" / "results.csv") + " --gt " +
                                     q(dir / "data" / "gt.csv") + " --out " + q(dir / "rep"),
                                 dir);
  REQUIRE(eval.exit_code == 0);
  CHECK(eval.out.find("ap=") == 0);
  CHECK(eval.out.find("ar=") != std::string::npos);
  const nlohmann::json report = nlohmann::json::parse(slurp(dir / "rep" / "report.json"));
  CHECK(report["ap"].get<double>() >= 0.5);
  CHECK(report["ar"].get<double>() == 1.0);
  REQUIRE(report["per_object"].size() == 1);
  CHECK(report["per_object"][0]["id"].get<int>() == 0);

  // render overlays for every dumped frame
  const RunResult render = run_cli("render --results " + q(dir / "trk" / "results.csv") +
                                       " --frames-dir " + q(dir / "trk" / "frames") + " --out " +
                                       q(dir / "ovl"),
                                   dir);
  REQUIRE(render.exit_code == 0);
  for (long i = 0; i < rows; ++i)
    CHECK(fs::exists(dir / "ovl" / ("overlay_" + std::to_string(i) + ".ppm")));

  // deterministic rerun produces byte-identical results
  const RunResult again = run_cli("track --events " + q(dir / "data" / "events.txt") +
                                      " --box 45,45,30,30 --config " + q(dir / "run.cfg") +
                                      " --out " + q(dir / "trk2"),
                                  dir);
  REQUIRE(again.exit_code == 0);
  CHECK(slurp(dir / "trk2" / "results.csv") == results);
}

TEST_CASE("render with an empty results file succeeds and writes nothing") {
  const fs::path dir = scratch("render_empty");
  write_file(dir / "results.csv", "frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode\n");
  const RunResult r =
      run_cli("render --results " + q(dir / "results.csv") + " --out " + q(dir / "out"), dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out"));
  bool any_overlay = false;
  for (const auto& entry : fs::directory_iterator(dir / "out"))
    any_overlay |= entry.path().filename().string().rfind("overlay_", 0) == 0;
  CHECK_FALSE(any_overlay);
}

TEST_CASE("help text states the published defaults") {
  const fs::path dir = scratch("help");
  const RunResult cal = run_cli("calibrate --help", dir);
  REQUIRE(cal.exit_code == 0);
  CHECK(cal.out.find("0.0832") != std::string::npos);
  CHECK(cal.out.find("0.0927") != std::string::npos);
  CHECK(cal.out.find("omega=0.05") != std::string::npos);

  const RunResult trk = run_cli("track --help", dir);
  REQUIRE(trk.exit_code == 0);
  CHECK(trk.out.find("tau=1.5") != std::string::npos);
  CHECK(trk.out.find("lambda=0.7") != std::string::npos);
  CHECK(trk.out.find("mu=0.3") != std::string::npos);
}
