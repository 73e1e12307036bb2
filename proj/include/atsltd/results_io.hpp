#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "atsltd/track.hpp"

namespace atsltd {

// One row of a tracking results CSV: the estimate for one frame and object.
struct ResultRow {
  std::int64_t frame_index = 0;
  Timestamp t_start = 0;
  Timestamp t_end = 0;
  int object_id = 0;
  BoundingBox box;
  double iou_prev = 0.0;
  TrackMode mode = TrackMode::Tracking;
};

// Header: frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode
// Times are decimal seconds, box fields and iou use 6 fractional digits,
// mode is "tracking" or "recovering". Output is byte-stable across runs.
void write_results(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_file(const std::string& path, const std::vector<ResultRow>& rows);

std::vector<ResultRow> parse_results(std::istream& in);
std::vector<ResultRow> parse_results_file(const std::string& path);

// Pairs a tracker history with the frames it ran over.
std::vector<ResultRow> rows_from_history(const TrackState& state,
                                         const std::vector<AtslTdFrame>& frames,
                                         int object_id = 0);

// Frame dump: frame_{index}_on.pgm, frame_{index}_off.pgm and a
// frame_{index}.json sidecar with times, event count and the NZGE at the cut.
void dump_frame(const std::string& dir, const AtslTdFrame& frame, std::int64_t index);
AtslTdFrame load_frame_dump(const std::string& dir, std::int64_t index);

}  // namespace atsltd
