#include "atsltd/event_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace atsltd {

namespace {

const char* skip_ws(const char* p, const char* end) {
  while (p != end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p;
}

// Parses one whitespace-delimited field with from_chars semantics.
template <typename T>
const char* parse_field(const char* p, const char* end, T& out, const char* what,
                        std::size_t line_no) {
  p = skip_ws(p, end);
  auto [next, ec] = std::from_chars(p, end, out);
  if (ec != std::errc() || next == p)
    throw ParseError(std::string("bad ") + what + " field", line_no);
  return next;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

EventStreamReader::EventStreamReader(std::istream& in, SensorGeometry geometry,
                                     Timestamp ordering_slack_us)
    : in_(in), geometry_(geometry), slack_(ordering_slack_us) {
  if (geometry_.width <= 0 || geometry_.height <= 0)
    throw ConfigError("sensor geometry must be positive");
}

std::optional<Event> EventStreamReader::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (line_.empty() || blank(line_)) continue;

    const char* p = line_.data();
    const char* end = p + line_.size();

    double t_sec = 0.0;
    std::int32_t u = 0, v = 0;
    int pol = 0;
    p = parse_field(p, end, t_sec, "timestamp", line_no_);
    p = parse_field(p, end, u, "x", line_no_);
    p = parse_field(p, end, v, "y", line_no_);
    p = parse_field(p, end, pol, "polarity", line_no_);
    if (skip_ws(p, end) != end) throw ParseError("trailing characters", line_no_);

    if (!(t_sec >= 0.0)) throw ParseError("negative timestamp", line_no_);
    if (pol != 0 && pol != 1) throw ParseError("polarity must be 0 or 1", line_no_);
    if (!geometry_.contains(u, v))
      throw BoundsError("line " + std::to_string(line_no_) + ": coordinate (" +
                        std::to_string(u) + ", " + std::to_string(v) +
                        ") outside sensor " + std::to_string(geometry_.width) + "x" +
                        std::to_string(geometry_.height));

    Timestamp t = static_cast<Timestamp>(std::llround(t_sec * kMicrosPerSecond));
    if (last_t_ >= 0 && t < last_t_) {
      if (last_t_ - t > slack_)
        throw OrderingError("line " + std::to_string(line_no_) + ": timestamp " +
                            format_seconds(t) + " regresses behind " + format_seconds(last_t_));
      t = last_t_;  // within slack: clamp so the stream stays non-decreasing
    }
    last_t_ = t;

    return Event{u, v, pol ? Polarity::On : Polarity::Off, t};
  }
  return std::nullopt;
}

std::vector<Event> read_events(std::istream& in, SensorGeometry geometry,
                               Timestamp ordering_slack_us) {
  EventStreamReader reader(in, geometry, ordering_slack_us);
  std::vector<Event> events;
  while (auto e = reader.next()) events.push_back(*e);
  return events;
}

std::vector<Event> read_events_file(const std::string& path, SensorGeometry geometry,
                                    Timestamp ordering_slack_us) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open events file: " + path);
  return read_events(in, geometry, ordering_slack_us);
}

std::string format_seconds(Timestamp t) {
  const bool neg = t < 0;
  const Timestamp a = neg ? -t : t;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", neg ? "-" : "",
                static_cast<long long>(a / kMicrosPerSecond),
                static_cast<long long>(a % kMicrosPerSecond));
  return buf;
}

void write_events(std::ostream& out, const std::vector<Event>& events) {
  for (const Event& e : events)
    out << format_seconds(e.t) << ' ' << e.u << ' ' << e.v << ' '
        << (e.p == Polarity::On ? 1 : 0) << '\n';
}

void write_events_file(const std::string& path, const std::vector<Event>& events) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  write_events(out, events);
  if (!out) throw Error("failed writing events to " + path);
}

std::vector<GroundTruthTrack> parse_ground_truth(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return {};
  ++line_no;
  // Tolerate an optional UTF-8 BOM and whitespace around the header.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  std::string header = line;
  header.erase(std::remove_if(header.begin(), header.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               header.end());
  if (header != "object_id,t,x,y,w,h")
    throw FormatError("ground truth header must be object_id,t,x,y,w,h");

  std::map<int, GroundTruthTrack> by_id;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || blank(line)) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    const char* p = line.data();
    const char* end = p + line.size();
    int id = 0;
    double t_sec = 0, x = 0, y = 0, w = 0, h = 0;
    p = parse_field(p, end, id, "object_id", line_no);
    p = parse_field(p, end, t_sec, "t", line_no);
    p = parse_field(p, end, x, "x", line_no);
    p = parse_field(p, end, y, "y", line_no);
    p = parse_field(p, end, w, "w", line_no);
    p = parse_field(p, end, h, "h", line_no);
    if (skip_ws(p, end) != end) throw ParseError("trailing characters", line_no);
    if (w <= 0.0 || h <= 0.0)
      throw FormatError("line " + std::to_string(line_no) + ": box size must be positive");
    if (!(t_sec >= 0.0))
      throw FormatError("line " + std::to_string(line_no) + ": negative timestamp");

    auto& track = by_id[id];
    track.object_id = id;
    track.entries.push_back(
        {static_cast<Timestamp>(std::llround(t_sec * kMicrosPerSecond)), {x, y, w, h}});
  }

  std::vector<GroundTruthTrack> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, track] : by_id) {
    const bool sorted = std::is_sorted(
        track.entries.begin(), track.entries.end(),
        [](const GroundTruthEntry& a, const GroundTruthEntry& b) { return a.t < b.t; });
    if (!sorted) {
      std::stable_sort(
          track.entries.begin(), track.entries.end(),
          [](const GroundTruthEntry& a, const GroundTruthEntry& b) { return a.t < b.t; });
      track.was_resorted = true;
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::vector<GroundTruthTrack> parse_ground_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground truth file: " + path);
  return parse_ground_truth(in);
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthTrack>& tracks) {
  out << "object_id,t,x,y,w,h\n";
  char buf[160];
  for (const auto& track : tracks)
    for (const auto& entry : track.entries) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%.3f,%.3f,%.3f,%.3f\n", track.object_id,
                    format_seconds(entry.t).c_str(), entry.box.x, entry.box.y, entry.box.w,
                    entry.box.h);
      out << buf;
    }
}

void write_ground_truth_file(const std::string& path,
                             const std::vector<GroundTruthTrack>& tracks) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  write_ground_truth(out, tracks);
  if (!out) throw Error("failed writing ground truth to " + path);
}

}  // namespace atsltd
