#include "atsltd/results_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "atsltd/event_io.hpp"
#include "atsltd/image_io.hpp"

namespace atsltd {

namespace {

constexpr char kHeader[] = "frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode";

const char* mode_name(TrackMode mode) {
  return mode == TrackMode::Tracking ? "tracking" : "recovering";
}

TrackMode mode_from_name(const std::string& name, std::size_t line_no) {
  if (name == "tracking") return TrackMode::Tracking;
  if (name == "recovering") return TrackMode::Recovering;
  throw ParseError("unknown tracker mode '" + name + "'", line_no);
}

}  // namespace

void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kHeader << "\n";
  char buf[256];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%s,%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n",
                  r.frame_index, format_seconds(r.t_start).c_str(),
                  format_seconds(r.t_end).c_str(), r.object_id, r.box.x, r.box.y, r.box.w,
                  r.box.h, r.iou_prev, mode_name(r.mode));
    out << buf;
  }
}

void write_results_file(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  write_results(out, rows);
  if (!out) throw Error("short write: " + path);
}

std::vector<ResultRow> parse_results(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("empty results file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kHeader) throw FormatError("unexpected results header: " + line);

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string fields = line;
    for (char& c : fields)
      if (c == ',') c = ' ';
    std::istringstream ss(fields);
    ResultRow r;
    double t_start_s = 0.0, t_end_s = 0.0;
    std::string mode;
    if (!(ss >> r.frame_index >> t_start_s >> t_end_s >> r.object_id >> r.box.x >> r.box.y >>
          r.box.w >> r.box.h >> r.iou_prev >> mode))
      throw ParseError("malformed results row", line_no);
    r.t_start = static_cast<Timestamp>(std::llround(t_start_s * kMicrosPerSecond));
    r.t_end = static_cast<Timestamp>(std::llround(t_end_s * kMicrosPerSecond));
    r.mode = mode_from_name(mode, line_no);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ResultRow> parse_results_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  return parse_results(in);
}

std::vector<ResultRow> rows_from_history(const TrackState& state,
                                         const std::vector<AtslTdFrame>& frames,
                                         int object_id) {
  if (state.history.size() != frames.size())
    throw Error("history and frame counts differ");
  std::vector<ResultRow> rows;
  rows.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const StepRecord& rec = state.history[i];
    rows.push_back({rec.frame_index, frames[i].start_time, frames[i].end_time, object_id,
                    rec.box, rec.iou_prev, rec.mode});
  }
  return rows;
}

void dump_frame(const std::string& dir, const AtslTdFrame& frame, std::int64_t index) {
  const std::string stem = dir + "/frame_" + std::to_string(index);
  write_pgm(stem + "_on.pgm", frame.on);
  write_pgm(stem + "_off.pgm", frame.off);
  nlohmann::json j;
  j["start_time_s"] = static_cast<double>(frame.start_time) / kMicrosPerSecond;
  j["end_time_s"] = static_cast<double>(frame.end_time) / kMicrosPerSecond;
  j["event_count"] = frame.event_count;
  j["nzge_at_cut"] = frame.nzge_at_cut;
  std::ofstream out(stem + ".json", std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + stem + ".json");
  out << j.dump(2) << "\n";
  if (!out) throw Error("short write: " + stem + ".json");
}

AtslTdFrame load_frame_dump(const std::string& dir, std::int64_t index) {
  const std::string stem = dir + "/frame_" + std::to_string(index);
  AtslTdFrame frame;
  frame.on = read_pgm(stem + "_on.pgm");
  frame.off = read_pgm(stem + "_off.pgm");
  if (frame.on.rows() != frame.off.rows() || frame.on.cols() != frame.off.cols())
    throw FormatError("channel images differ in shape: " + stem);
  frame.geometry = {static_cast<std::int32_t>(frame.on.cols()),
                    static_cast<std::int32_t>(frame.on.rows())};
  std::ifstream in(stem + ".json", std::ios::binary);
  if (!in) throw Error("cannot open: " + stem + ".json");
  nlohmann::json j;
  try {
    in >> j;
    frame.start_time = static_cast<Timestamp>(
        std::llround(j.at("start_time_s").get<double>() * kMicrosPerSecond));
    frame.end_time = static_cast<Timestamp>(
        std::llround(j.at("end_time_s").get<double>() * kMicrosPerSecond));
    frame.event_count = j.at("event_count").get<std::int64_t>();
    frame.nzge_at_cut = j.value("nzge_at_cut", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad frame sidecar " + stem + ".json: " + e.what());
  }
  return frame;
}

}  // namespace atsltd
