#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "atsltd/errors.hpp"
#include "atsltd/surface.hpp"

namespace atsltd {

// p x q grid of r x r patches over the sensor. Trailing pixels that do not
// fill a whole patch are dropped.
struct GridSpec {
  int p = 45;  // grid rows
  int q = 60;  // grid cols
  int r = 4;   // patch side in pixels

  static GridSpec for_geometry(const SensorGeometry& g, int patch_side = 4) {
    if (patch_side < 1) throw ConfigError("grid patch side must be >= 1");
    GridSpec s;
    s.r = patch_side;
    s.p = g.height / patch_side;
    s.q = g.width / patch_side;
    if (s.p < 1 || s.q < 1) throw ConfigError("sensor smaller than one grid patch");
    return s;
  }
};

struct EntropyMap {
  Eigen::ArrayXXd cells;  // p x q
  int nonzero_count = 0;  // number of cells with strictly positive entropy
};

// Base-2 Shannon entropy of the gray-level histogram of a patch. 0 for a
// constant patch; at most log2(min(patch size, 256)).
template <typename Derived>
double patch_entropy(const Eigen::ArrayBase<Derived>& patch) {
  int counts[256] = {};
  const auto& m = patch.derived();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      ++counts[static_cast<std::uint8_t>(m(r, c))];
  const double n = static_cast<double>(m.size());
  double h = 0.0;
  for (int z = 0; z < 256; ++z) {
    if (counts[z] == 0) continue;
    const double prob = counts[z] / n;
    h -= prob * std::log2(prob);
  }
  return h < 0.0 ? 0.0 : h;
}

// Per-cell entropy is the mean of the two channel entropies.
EntropyMap entropy_map(const IntensityPlane& on, const IntensityPlane& off,
                       const GridSpec& spec);

// Mean entropy over the cells with non-zero entropy; nullopt when the map is
// blank (no information yet).
std::optional<double> nzge(const EntropyMap& map);

// Convenience: exact NZGE of a finalized frame.
std::optional<double> frame_nzge(const AtslTdFrame& frame, const GridSpec& spec);

// Exact NZGE of an in-progress surface, rendered as of its last event.
std::optional<double> surface_nzge(const Surface& surface, const GridSpec& spec);

struct ConfidenceInterval {
  double alpha = 0.0;  // lower bound
  double beta = 0.0;   // upper bound
  double omega = 0.05;
};

class CalibrationSet {
 public:
  CalibrationSet() = default;
  explicit CalibrationSet(std::vector<double> samples) : samples_(std::move(samples)) {}

  void add(double nzge_value) { samples_.push_back(nzge_value); }
  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  double mean() const;
  double sample_stddev() const;  // n-1 divisor

 private:
  std::vector<double> samples_;
};

// Two-sided Student-t critical value |g_{omega/2}| for the given degrees of
// freedom. Backed by an embedded table for df in [1, 200] at omega = 0.05 and
// 0.01 with the normal quantile beyond; other omega values are rejected.
double t_critical(int df, double omega);

// [mean - g * s/sqrt(n), mean + g * s/sqrt(n)] over the calibration samples.
// Requires n >= 2 and a strictly positive sample deviation.
ConfidenceInterval calibrate_interval(const CalibrationSet& set, double omega);
ConfidenceInterval interval_from_stats(double mean, double stddev, int n, double omega);

// Published default interval for 180x240 sensors. Data-dependent in general:
// recalibrate for your own streams.
ConfidenceInterval default_interval();

// Exact-path cut decision: true once NZGE is defined and >= interval.alpha.
// Checks run in batches, so NZGE may overshoot beta between looks; cutting at
// alpha rather than inside [alpha, beta] keeps overshot frames from staying
// open forever.
bool should_finalize(const IntensityPlane& on, const IntensityPlane& off,
                     const GridSpec& spec, const ConfidenceInterval& interval);

// Incremental NZGE tracker for the event loop. Entropy is recomputed only
// for cells touched since the previous check; untouched cells keep their
// cached value even though the global decay has moved on. The approximation
// is deterministic and errs toward slightly earlier cuts.
class NzgeMonitor {
 public:
  NzgeMonitor(const SensorGeometry& geometry, const GridSpec& spec);

  void on_event(std::int32_t u, std::int32_t v);

  // Refreshes dirty cells against the surface and returns the current NZGE
  // estimate (nullopt while the map is blank).
  std::optional<double> update(const Surface& surface);

  bool should_finalize(const Surface& surface, const ConfidenceInterval& interval) {
    const auto value = update(surface);
    return value.has_value() && *value >= interval.alpha;
  }

  // Clears all cached state; call when the surface is reset.
  void reset();

  const GridSpec& spec() const { return spec_; }

 private:
  double channel_entropy(const TimePlane& plane, int row0, int col0,
                         Timestamp last_event, Timestamp frame_start);

  GridSpec spec_;
  std::vector<std::int32_t> cell_col_of_u_;  // -1 for dropped trailing pixels
  std::vector<std::int32_t> cell_row_of_v_;
  Eigen::ArrayXXd cell_entropy_;
  std::vector<std::uint8_t> dirty_mask_;
  std::vector<std::int32_t> dirty_cells_;
  std::vector<double> plogp_;  // -p log2 p for the quantized patch probabilities
  std::array<int, 256> counts_{};
  std::vector<std::uint8_t> levels_;
  double entropy_sum_ = 0.0;
  int nonzero_count_ = 0;
};

}  // namespace atsltd
