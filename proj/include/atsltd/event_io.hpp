#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "atsltd/box.hpp"
#include "atsltd/errors.hpp"
#include "atsltd/event.hpp"

namespace atsltd {

// Streaming reader for the plain-text event format: one "t x y p" record per
// line, t in decimal seconds, p in {0, 1}. Single pass, constant memory.
class EventStreamReader {
 public:
  EventStreamReader(std::istream& in, SensorGeometry geometry,
                    Timestamp ordering_slack_us = 0);

  // Next event, or nullopt at end of stream. Throws ParseError, BoundsError
  // or OrderingError on bad input. Timestamps that regress by no more than
  // the slack are clamped to the running maximum so the output stays
  // non-decreasing.
  std::optional<Event> next();

  const SensorGeometry& geometry() const { return geometry_; }

 private:
  std::istream& in_;
  SensorGeometry geometry_;
  Timestamp slack_;
  Timestamp last_t_ = -1;
  std::size_t line_no_ = 0;
  std::string line_;
};

std::vector<Event> read_events(std::istream& in, SensorGeometry geometry,
                               Timestamp ordering_slack_us = 0);
std::vector<Event> read_events_file(const std::string& path, SensorGeometry geometry,
                                    Timestamp ordering_slack_us = 0);

// Writes events in the same text format (t printed with microsecond
// precision). Reparsing the output reproduces the events exactly.
void write_events(std::ostream& out, const std::vector<Event>& events);
void write_events_file(const std::string& path, const std::vector<Event>& events);

struct GroundTruthEntry {
  Timestamp t = 0;
  BoundingBox box;
};

struct GroundTruthTrack {
  int object_id = 0;
  std::vector<GroundTruthEntry> entries;  // sorted by t
  bool was_resorted = false;              // input was out of order
};

// CSV with header "object_id,t,x,y,w,h", t in decimal seconds. Tracks come
// back grouped by object id and time sorted; out-of-order input is sorted and
// flagged rather than rejected.
std::vector<GroundTruthTrack> parse_ground_truth(std::istream& in);
std::vector<GroundTruthTrack> parse_ground_truth_file(const std::string& path);

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthTrack>& tracks);
void write_ground_truth_file(const std::string& path,
                             const std::vector<GroundTruthTrack>& tracks);

// Formats integer microseconds as decimal seconds with 6 fractional digits.
std::string format_seconds(Timestamp t);

}  // namespace atsltd
