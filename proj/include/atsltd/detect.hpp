#pragma once

#include <vector>

#include "atsltd/box.hpp"
#include "atsltd/errors.hpp"
#include "atsltd/surface.hpp"

namespace atsltd {

// Previous box inflated by tau and clipped to the sensor. Keeps the original
// box so the proposal ladder can size itself off it.
struct SearchRegion {
  BoundingBox box;       // clipped region
  BoundingBox prev_box;  // box the region was grown from

  static SearchRegion around(const BoundingBox& prev, double tau,
                             const SensorGeometry& geometry);
};

struct Proposal {
  BoundingBox box;
  double detector_score = 0.0;  // >= 0
  double refine_score = 0.0;    // filled in by refine()
};

struct DetectorConfig {
  int max_boxes = 1000;
  double min_box_area = 100.0;  // px^2
  double nms_overlap = 0.8;
  // Candidate ladder relative to the previous box: linear size multipliers
  // and aspect-ratio multipliers. Scales are geometric in [0.5, 2] and dense
  // enough near 1 that a box only a few pixels larger than the previous one
  // is reachable (the score optimum on an event frame encloses the contour
  // sweep, which exceeds the object by the per-frame motion). Wider ladders
  // waste work; the refine filter discards large area or aspect changes.
  std::vector<double> scales = geometric_scales();
  std::vector<double> aspects = {0.5, 0.75, 1.0, 4.0 / 3.0, 2.0};

  static std::vector<double> geometric_scales(int steps_per_octave = 8);
};

struct ProposalSet {
  std::vector<Proposal> proposals;  // sorted by detector_score descending
  bool degenerate_region = false;   // region clipped to zero area
};

// Contour-density proposal generator. ATSLTD intensities are themselves an
// edge map with recency encoded as brightness, so candidate boxes are scored
// by the recency-weighted mass (both channels summed) of the contour
// components they fully enclose, minus the in-box mass of components that
// straddle the boundary, normalized by box perimeter. Each candidate then
// snaps to the tight bounding box of its enclosed components. Sliding
// candidates come from the scale/aspect ladder; near-duplicates are
// suppressed by NMS. Deterministic for fixed inputs.
ProposalSet propose(const AtslTdFrame& frame, const SearchRegion& region,
                    const DetectorConfig& cfg);

// min(x, 1/x): 1 at x = 1, falling toward 0 as x leaves 1 in either
// direction. Domain error for x <= 0.
double phi(double x);

// phi(area ratio) * phi(aspect ratio) between the previous box and a
// candidate; 1 for geometrically identical boxes.
double refine_score(const BoundingBox& prev, const BoundingBox& cand);

// Keeps proposals scoring strictly above lambda against prev, annotating each
// kept proposal with its score. An empty result is a legal outcome.
std::vector<Proposal> refine(const BoundingBox& prev, const std::vector<Proposal>& proposals,
                             double lambda);

}  // namespace atsltd
