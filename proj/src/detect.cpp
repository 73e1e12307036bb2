#include "atsltd/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace atsltd {

SearchRegion SearchRegion::around(const BoundingBox& prev, double tau,
                                  const SensorGeometry& geometry) {
  if (!(tau > 1.0)) throw ConfigError("search region factor must be > 1");
  if (!prev.valid()) throw ConfigError("previous box is degenerate");
  const BoundingBox grown{prev.cx() - 0.5 * tau * prev.w, prev.cy() - 0.5 * tau * prev.h,
                          tau * prev.w, tau * prev.h};
  return {clip_to_sensor(grown, geometry), prev};
}

std::vector<double> DetectorConfig::geometric_scales(int steps_per_octave) {
  if (steps_per_octave < 1) throw ConfigError("scale ladder needs at least one step");
  std::vector<double> scales;
  for (int k = -steps_per_octave; k <= steps_per_octave; ++k)
    scales.push_back(std::exp2(static_cast<double>(k) / steps_per_octave));
  return scales;
}

double phi(double x) {
  if (!(x > 0.0)) throw std::domain_error("phi requires a positive argument");
  return x < 1.0 ? x : 1.0 / x;
}

double refine_score(const BoundingBox& prev, const BoundingBox& cand) {
  if (!prev.valid() || !cand.valid()) throw ConfigError("degenerate box in refine_score");
  return phi(prev.area() / cand.area()) * phi(prev.aspect() / cand.aspect());
}

std::vector<Proposal> refine(const BoundingBox& prev, const std::vector<Proposal>& proposals,
                             double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
  std::vector<Proposal> kept;
  for (const Proposal& p : proposals) {
    const double score = refine_score(prev, p.box);
    if (score > lambda) {
      Proposal out = p;
      out.refine_score = score;
      kept.push_back(out);
    }
  }
  return kept;
}

namespace {

using Integral = Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// integral(r, c) = sum of on+off over rows < r, cols < c
Integral build_integral(const IntensityPlane& on, const IntensityPlane& off) {
  const Eigen::Index h = on.rows(), w = on.cols();
  Integral integral = Integral::Zero(h + 1, w + 1);
  for (Eigen::Index r = 0; r < h; ++r) {
    std::int64_t row_sum = 0;
    for (Eigen::Index c = 0; c < w; ++c) {
      row_sum += static_cast<std::int64_t>(on(r, c)) + off(r, c);
      integral(r + 1, c + 1) = integral(r, c + 1) + row_sum;
    }
  }
  return integral;
}

std::int64_t box_sum(const Integral& integral, int x, int y, int w, int h) {
  return integral(y + h, x + w) - integral(y, x + w) - integral(y + h, x) + integral(y, x);
}

struct Candidate {
  int x, y, w, h;
  double score;
};

// Connected contour fragment on the union of both channels: inclusive pixel
// bounding box plus total intensity mass.
struct Component {
  int x0, y0, x1, y1;
  std::int64_t mass;
};

std::vector<Component> label_components(const IntensityPlane& on, const IntensityPlane& off) {
  const int h = static_cast<int>(on.rows());
  const int w = static_cast<int>(on.cols());
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(h) * w, 0);
  const auto lit = [&](int x, int y) { return on(y, x) > 0 || off(y, x) > 0; };
  std::vector<Component> components;
  std::vector<std::pair<int, int>> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (visited[static_cast<std::size_t>(sy) * w + sx] || !lit(sx, sy)) continue;
      Component comp{sx, sy, sx, sy, 0};
      stack.assign(1, {sx, sy});
      visited[static_cast<std::size_t>(sy) * w + sx] = 1;
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        comp.x0 = std::min(comp.x0, x);
        comp.y0 = std::min(comp.y0, y);
        comp.x1 = std::max(comp.x1, x);
        comp.y1 = std::max(comp.y1, y);
        comp.mass += static_cast<std::int64_t>(on(y, x)) + off(y, x);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            std::uint8_t& seen = visited[static_cast<std::size_t>(ny) * w + nx];
            if (seen || !lit(nx, ny)) continue;
            seen = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      components.push_back(comp);
    }
  }
  return components;
}

}  // namespace

ProposalSet propose(const AtslTdFrame& frame, const SearchRegion& region,
                    const DetectorConfig& cfg) {
  if (cfg.max_boxes < 1) throw ConfigError("max_boxes must be >= 1");
  if (cfg.min_box_area < 1.0) throw ConfigError("min_box_area must be >= 1");

  ProposalSet result;
  // Innermost integer rectangle of the clipped region, so integer-grid
  // candidates never poke outside it.
  const int rx0 = static_cast<int>(std::ceil(region.box.x));
  const int ry0 = static_cast<int>(std::ceil(region.box.y));
  const int rx1 = static_cast<int>(std::floor(region.box.x2()));
  const int ry1 = static_cast<int>(std::floor(region.box.y2()));
  if (rx1 - rx0 < 1 || ry1 - ry0 < 1) {
    result.degenerate_region = true;
    return result;
  }

  const Integral integral = build_integral(frame.on, frame.off);

  // Contour fragments that an in-region box could wholly enclose. A box only
  // earns credit for fragments it contains completely; anything it cuts
  // through counts against it, so partial captures never outrank enclosures.
  std::vector<Component> components;
  for (const Component& c : label_components(frame.on, frame.off))
    if (c.x0 >= rx0 && c.y0 >= ry0 && c.x1 < rx1 && c.y1 < ry1) components.push_back(c);

  // distinct integer sizes from the ladder; the dense scale set rounds many
  // combinations onto the same box
  std::vector<std::pair<int, int>> sizes;
  for (const double scale : cfg.scales) {
    for (const double aspect : cfg.aspects) {
      const double sqrt_a = std::sqrt(aspect);
      const int bw = std::max(1, static_cast<int>(std::lround(region.prev_box.w * scale * sqrt_a)));
      const int bh = std::max(1, static_cast<int>(std::lround(region.prev_box.h * scale / sqrt_a)));
      sizes.emplace_back(bw, bh);
    }
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::vector<Candidate> candidates;
  for (const auto& [bw, bh] : sizes) {
    if (bw > rx1 - rx0 || bh > ry1 - ry0) continue;
    if (static_cast<double>(bw) * bh < cfg.min_box_area) continue;

    const int stride_x = std::max(1, bw / 16);
    const int stride_y = std::max(1, bh / 16);

    for (int y = ry0;; y += stride_y) {
      if (y + bh > ry1) {
        if (y - stride_y + bh < ry1) y = ry1 - bh;  // cover the far edge
        else break;
      }
      for (int x = rx0;; x += stride_x) {
        if (x + bw > rx1) {
          if (x - stride_x + bw < rx1) x = rx1 - bw;
          else break;
        }
        std::int64_t enclosed = 0;
        int sx0 = rx1, sy0 = ry1, sx1 = -1, sy1 = -1;
        for (const Component& c : components) {
          if (c.x0 >= x && c.y0 >= y && c.x1 < x + bw && c.y1 < y + bh) {
            enclosed += c.mass;
            sx0 = std::min(sx0, c.x0);
            sy0 = std::min(sy0, c.y0);
            sx1 = std::max(sx1, c.x1);
            sy1 = std::max(sy1, c.y1);
          }
        }
        if (sx1 >= 0) {
          // Snap to the tight bounding box of the enclosed contours, so the
          // scan grid's stride never loosens the proposal.
          const int nw = sx1 - sx0 + 1;
          const int nh = sy1 - sy0 + 1;
          const std::int64_t inside = box_sum(integral, sx0, sy0, nw, nh);
          const std::int64_t numerator = 2 * enclosed - inside;
          if (static_cast<double>(nw) * nh >= cfg.min_box_area && numerator > 0) {
            const double score = static_cast<double>(numerator) / (2.0 * (nw + nh) * 255.0);
            candidates.push_back({sx0, sy0, nw, nh, score});
          }
        }
        if (x == rx1 - bw) break;
      }
      if (y == ry1 - bh) break;
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    if (a.w != b.w) return a.w < b.w;
    return a.h < b.h;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Candidate& a, const Candidate& b) {
                                 return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
                               }),
                   candidates.end());

  // greedy NMS; the high default overlap keeps candidates dense near the object
  for (const Candidate& c : candidates) {
    if (static_cast<int>(result.proposals.size()) >= cfg.max_boxes) break;
    const BoundingBox box{static_cast<double>(c.x), static_cast<double>(c.y),
                          static_cast<double>(c.w), static_cast<double>(c.h)};
    bool suppressed = false;
    for (const Proposal& kept : result.proposals) {
      if (iou(kept.box, box) > cfg.nms_overlap) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) result.proposals.push_back({box, c.score, 0.0});
  }
  return result;
}

}  // namespace atsltd
