#include "atsltd/nzge.hpp"

#include <cmath>

namespace atsltd {

EntropyMap entropy_map(const IntensityPlane& on, const IntensityPlane& off,
                       const GridSpec& spec) {
  if (on.rows() != off.rows() || on.cols() != off.cols())
    throw ConfigError("channel planes differ in shape");
  if (spec.p * spec.r > on.rows() || spec.q * spec.r > on.cols())
    throw ConfigError("grid spec does not fit the image");

  EntropyMap map;
  map.cells.resize(spec.p, spec.q);
  for (int row = 0; row < spec.p; ++row)
    for (int col = 0; col < spec.q; ++col) {
      const double h_on = patch_entropy(on.block(row * spec.r, col * spec.r, spec.r, spec.r));
      const double h_off = patch_entropy(off.block(row * spec.r, col * spec.r, spec.r, spec.r));
      const double h = 0.5 * (h_on + h_off);
      map.cells(row, col) = h;
      if (h > 0.0) ++map.nonzero_count;
    }
  return map;
}

std::optional<double> nzge(const EntropyMap& map) {
  if (map.nonzero_count == 0) return std::nullopt;
  // cells are non-negative, so the total equals the sum over non-zero cells
  return map.cells.sum() / map.nonzero_count;
}

std::optional<double> frame_nzge(const AtslTdFrame& frame, const GridSpec& spec) {
  return nzge(entropy_map(frame.on, frame.off, spec));
}

std::optional<double> surface_nzge(const Surface& surface, const GridSpec& spec) {
  if (surface.empty()) return std::nullopt;
  return nzge(entropy_map(surface.render(Polarity::On), surface.render(Polarity::Off), spec));
}

double CalibrationSet::mean() const {
  if (samples_.empty()) throw CalibrationError("no calibration samples");
  double sum = 0.0;
  for (double s : samples_) sum += s;
  return sum / static_cast<double>(samples_.size());
}

double CalibrationSet::sample_stddev() const {
  if (samples_.size() < 2)
    throw CalibrationError("sample deviation needs at least two samples");
  const double m = mean();
  double ss = 0.0;
  for (double s : samples_) ss += (s - m) * (s - m);
  return std::sqrt(ss / static_cast<double>(samples_.size() - 1));
}

ConfidenceInterval interval_from_stats(double mean, double stddev, int n, double omega) {
  if (n < 2) throw CalibrationError("calibration needs at least two samples");
  if (!(omega > 0.0 && omega < 1.0)) throw CalibrationError("omega must be in (0, 1)");
  if (!(stddev > 0.0))
    throw CalibrationError("degenerate interval: sample deviation is zero");
  const double g = t_critical(n - 1, omega);
  const double margin = g * stddev / std::sqrt(static_cast<double>(n));
  ConfidenceInterval interval{mean - margin, mean + margin, omega};
  if (!(interval.alpha > 0.0))
    throw CalibrationError("interval lower bound is not positive; samples too dispersed");
  return interval;
}

ConfidenceInterval calibrate_interval(const CalibrationSet& set, double omega) {
  if (set.size() < 2) throw CalibrationError("calibration needs at least two samples");
  return interval_from_stats(set.mean(), set.sample_stddev(),
                             static_cast<int>(set.size()), omega);
}

ConfidenceInterval default_interval() { return {0.0832, 0.0927, 0.05}; }

bool should_finalize(const IntensityPlane& on, const IntensityPlane& off,
                     const GridSpec& spec, const ConfidenceInterval& interval) {
  const auto value = nzge(entropy_map(on, off, spec));
  return value.has_value() && *value >= interval.alpha;
}

NzgeMonitor::NzgeMonitor(const SensorGeometry& geometry, const GridSpec& spec)
    : spec_(spec) {
  if (spec.p * spec.r > geometry.height || spec.q * spec.r > geometry.width)
    throw ConfigError("grid spec does not fit the sensor");
  cell_col_of_u_.assign(geometry.width, -1);
  for (std::int32_t u = 0; u < spec.q * spec.r; ++u) cell_col_of_u_[u] = u / spec.r;
  cell_row_of_v_.assign(geometry.height, -1);
  for (std::int32_t v = 0; v < spec.p * spec.r; ++v) cell_row_of_v_[v] = v / spec.r;
  cell_entropy_ = Eigen::ArrayXXd::Zero(spec.p, spec.q);
  dirty_mask_.assign(static_cast<std::size_t>(spec.p) * spec.q, 0);
  dirty_cells_.reserve(256);

  // -prob * log2(prob) for the quantized probabilities k / r^2; level counts
  // are the only thing patch entropy depends on.
  const int n = spec.r * spec.r;
  plogp_.resize(n + 1, 0.0);
  for (int k = 1; k < n; ++k) {
    const double prob = static_cast<double>(k) / n;
    plogp_[k] = -prob * std::log2(prob);
  }
  plogp_[n] = 0.0;
  counts_.fill(0);
  levels_.resize(n);
}

void NzgeMonitor::on_event(std::int32_t u, std::int32_t v) {
  const std::int32_t col = cell_col_of_u_[u];
  const std::int32_t row = cell_row_of_v_[v];
  if (col < 0 || row < 0) return;  // trailing partial cells are dropped
  const std::int32_t cell = row * spec_.q + col;
  if (!dirty_mask_[cell]) {
    dirty_mask_[cell] = 1;
    dirty_cells_.push_back(cell);
  }
}

double NzgeMonitor::channel_entropy(const TimePlane& plane, int row0, int col0,
                                    Timestamp last_event, Timestamp frame_start) {
  const int r = spec_.r;
  int n_levels = 0;
  for (int dc = 0; dc < r; ++dc)
    for (int dr = 0; dr < r; ++dr) {
      const Timestamp set_time = plane(row0 + dr, col0 + dc);
      const std::uint8_t value =
          set_time == kPixelUnset ? std::uint8_t{0}
                                  : decay_value(set_time, last_event, frame_start);
      if (counts_[value]++ == 0) levels_[n_levels++] = value;
    }
  double h = 0.0;
  for (int i = 0; i < n_levels; ++i) {
    h += plogp_[counts_[levels_[i]]];
    counts_[levels_[i]] = 0;
  }
  return h < 0.0 ? 0.0 : h;
}

std::optional<double> NzgeMonitor::update(const Surface& surface) {
  const Timestamp last_event = surface.last_event_time();
  const Timestamp frame_start = surface.frame_start();
  for (const std::int32_t cell : dirty_cells_) {
    const int row = cell / spec_.q;
    const int col = cell % spec_.q;
    const double h_on = channel_entropy(surface.plane(Polarity::On), row * spec_.r,
                                        col * spec_.r, last_event, frame_start);
    const double h_off = channel_entropy(surface.plane(Polarity::Off), row * spec_.r,
                                         col * spec_.r, last_event, frame_start);
    const double fresh = 0.5 * (h_on + h_off);
    const double stale = cell_entropy_(row, col);
    if (stale > 0.0) {
      entropy_sum_ -= stale;
      --nonzero_count_;
    }
    if (fresh > 0.0) {
      entropy_sum_ += fresh;
      ++nonzero_count_;
    }
    cell_entropy_(row, col) = fresh;
    dirty_mask_[cell] = 0;
  }
  dirty_cells_.clear();
  if (nonzero_count_ == 0) return std::nullopt;
  return entropy_sum_ / nonzero_count_;
}

void NzgeMonitor::reset() {
  cell_entropy_.setZero();
  std::fill(dirty_mask_.begin(), dirty_mask_.end(), std::uint8_t{0});
  dirty_cells_.clear();
  entropy_sum_ = 0.0;
  nonzero_count_ = 0;
}

}  // namespace atsltd
