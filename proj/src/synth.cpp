#include "rdd/synth.hpp"

#include <algorithm>
#include <cmath>

#include "rdd/errors.hpp"
#include "rdd/random.hpp"
#include "text.hpp"

namespace rdd {

void PerturbParams::validate() const {
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw ContractError("jitter must be >= 0");
  if (drop_every_k && *drop_every_k == 0) throw ContractError("drop_every_k must be >= 1");
  const bool range_ok = score.lo >= 0.0 && score.hi <= 1.0 && score.lo <= score.hi;
  if (!range_ok) throw ContractError("score model must lie within [0, 1] with lo <= hi");
}

namespace {

constexpr int kJitterAttempts = 16;
constexpr int kPlacementAttempts = 64;

bool overlaps(const BoundingBox& a, const BoundingBox& b) {
  return std::min(a.xmax(), b.xmax()) > std::max(a.xmin(), b.xmin()) &&
         std::min(a.ymax(), b.ymax()) > std::max(a.ymin(), b.ymin());
}

bool clear_of(const BoundingBox& box, const std::vector<BoundingBox>& occupied) {
  return std::none_of(occupied.begin(), occupied.end(),
                      [&](const BoundingBox& o) { return overlaps(box, o); });
}

std::vector<BoundingBox> boxes_of(const ImageRecord& image, const DamageClass& label) {
  std::vector<BoundingBox> out;
  for (const auto& a : image.ground_truth) {
    if (a.label == label) out.push_back(a.box);
  }
  return out;
}

/// First grid cell (row-major) free of `occupied`: a coarse grid first, then
/// single pixels.
std::optional<BoundingBox> free_cell(int width, int height,
                                     const std::vector<BoundingBox>& occupied) {
  const int coarse = std::max(1, std::min(width, height) / 16);
  for (const int cell : {coarse, 1}) {
    for (int y = 0; y + cell <= height; y += cell) {
      for (int x = 0; x + cell <= width; x += cell) {
        const BoundingBox box(x, y, x + cell, y + cell);
        if (clear_of(box, occupied)) return box;
      }
    }
    if (cell == 1) break;
  }
  return std::nullopt;
}

double draw_score(const ScoreModel& model, StableRng& rng) {
  if (model.kind == ScoreModel::Kind::Constant) return model.lo;
  return std::clamp(rng.uniform(model.lo, model.hi), 0.0, 1.0);
}

bool dropped(std::size_t position, const std::optional<std::size_t>& every_k) {
  return every_k && (position + 1) % *every_k == 0;
}

struct FalseBox {
  BoundingBox box;
  bool clear;
};

FalseBox place_false_positive(const ImageRecord& image, const std::vector<BoundingBox>& occupied,
                              StableRng& rng) {
  const double w = image.width, h = image.height;
  const double shortest = std::min(w, h);
  const double min_side = std::max(1.0, shortest / 20.0);
  const double max_side = std::max(min_side, shortest / 5.0);
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    const double bw = std::min(w, rng.uniform(min_side, max_side));
    const double bh = std::min(h, rng.uniform(min_side, max_side));
    const double x = rng.uniform(0.0, w - bw);
    const double y = rng.uniform(0.0, h - bh);
    const BoundingBox box(x, y, std::min(w, x + bw), std::min(h, y + bh));
    if (clear_of(box, occupied)) return {box, true};
  }
  if (const auto cell = free_cell(image.width, image.height, occupied)) return {*cell, true};
  return {BoundingBox(0.0, 0.0, std::min(w, min_side), std::min(h, min_side)), false};
}

}  // namespace

PerturbResult perturb(std::span<const ImageRecord> ground_truth, const PerturbParams& params) {
  params.validate();
  const auto& fp_classes = whitelisted_classes();

  PerturbResult result;
  for (const auto& image : ground_truth) {
    StableRng rng(derive_seed(params.seed, image.image_id));
    const double w = image.width, h = image.height;

    for (std::size_t j = 0; j < image.ground_truth.size(); ++j) {
      if (dropped(j, params.drop_every_k)) continue;
      const auto& src = image.ground_truth[j];
      std::optional<BoundingBox> box;
      if (params.jitter == 0.0) {
        box = src.box;
      } else {
        for (int attempt = 0; attempt < kJitterAttempts && !box; ++attempt) {
          const auto shift = [&](double v, double limit) {
            return std::clamp(v + rng.uniform(-params.jitter, params.jitter), 0.0, limit);
          };
          const double x0 = shift(src.box.xmin(), w), y0 = shift(src.box.ymin(), h);
          const double x1 = shift(src.box.xmax(), w), y1 = shift(src.box.ymax(), h);
          if (x0 < x1 && y0 < y1) box = BoundingBox(x0, y0, x1, y1);
        }
        if (!box) {
          ++result.jitter_fallbacks;
          box = src.box;
        }
      }
      result.detections.emplace_back(image.image_id, src.label, *box,
                                     draw_score(params.score, rng));
    }

    for (std::size_t f = 0; f < params.fp_per_image; ++f) {
      const auto& label = fp_classes[f % fp_classes.size()];
      const auto placed = place_false_positive(image, boxes_of(image, label), rng);
      if (!placed.clear) ++result.forced_overlaps;
      result.detections.emplace_back(image.image_id, label, placed.box,
                                     draw_score(params.score, rng));
    }
  }
  return result;
}

double jitter_iou_lower_bound(const BoundingBox& box, double jitter) {
  const double w = box.width(), h = box.height(), d2 = 2.0 * jitter;
  if (w <= d2 || h <= d2) return 0.0;
  // Overlap keeps at least (w-2d)x(h-2d); the union stays inside (w+2d)x(h+2d).
  return ((w - d2) * (h - d2)) / ((w + d2) * (h + d2));
}

double max_safe_jitter(const BoundingBox& box, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ContractError("IoU threshold must lie in (0, 1]");
  }
  const double t = iou_threshold;
  if (t == 1.0) return 0.0;
  // 4(1-t) d^2 - 2(w+h)(1+t) d + (1-t) w h = 0, smaller root.
  const double w = box.width(), h = box.height();
  const double a = 4.0 * (1.0 - t);
  const double b = 2.0 * (w + h) * (1.0 + t);
  const double c = (1.0 - t) * w * h;
  const double disc = b * b - 4.0 * a * c;
  // Stable form of (b - sqrt(disc)) / (2a).
  return (2.0 * c) / (b + std::sqrt(std::max(0.0, disc)));
}

Counts expected_counts(std::span<const ImageRecord> ground_truth, const PerturbParams& params,
                       double iou_threshold, const ClassSet& whitelist) {
  params.validate();
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ContractError("IoU threshold must lie in (0, 1]");
  }
  const double d = params.jitter;

  Counts counts;
  for (const auto& image : ground_truth) {
    const auto& gt = image.ground_truth;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (!whitelist.contains(gt[j].label)) continue;
      if (dropped(j, params.drop_every_k)) {
        ++counts.fn;
        continue;
      }
      const auto& src = gt[j].box;
      const double lower = jitter_iou_lower_bound(src, d);
      if (lower < iou_threshold) {
        throw UnsafeParamsError(
            image.image_id + ": jitter " + detail::format_double(d) + " can push box " +
            std::to_string(j + 1) + " below IoU " + detail::format_double(iou_threshold) +
            " (safe jitter for this box is " +
            detail::format_double(max_safe_jitter(src, iou_threshold)) + ")");
      }
      // The jittered box must prefer its own source over every other
      // same-class ground truth, dropped ones included.
      const double grown_x0 = std::max(0.0, src.xmin() - d), grown_y0 = std::max(0.0, src.ymin() - d);
      const BoundingBox grown(grown_x0, grown_y0, src.xmax() + d, src.ymax() + d);
      const double min_area = (src.width() - 2.0 * d) * (src.height() - 2.0 * d);
      for (std::size_t o = 0; o < gt.size(); ++o) {
        if (o == j || gt[o].label != gt[j].label) continue;
        const auto& other = gt[o].box;
        const double iw = std::min(grown.xmax(), other.xmax()) - std::max(grown.xmin(), other.xmin());
        const double ih = std::min(grown.ymax(), other.ymax()) - std::max(grown.ymin(), other.ymin());
        if (iw <= 0.0 || ih <= 0.0) continue;
        const double upper = (iw * ih) / std::max(other.area(), min_area);
        if (upper >= lower) {
          throw UnsafeParamsError(image.image_id + ": boxes " + std::to_string(j + 1) + " and " +
                                  std::to_string(o + 1) + " (" + gt[j].label.code() +
                                  ") overlap too much for an unambiguous match");
        }
      }
      ++counts.tp;
    }

    const auto& fp_classes = whitelisted_classes();
    for (std::size_t f = 0; f < params.fp_per_image; ++f) {
      const auto& label = fp_classes[f % fp_classes.size()];
      if (!whitelist.contains(label)) continue;
      if (!free_cell(image.width, image.height, boxes_of(image, label))) {
        throw UnsafeParamsError(image.image_id + ": no room for a false " + label.code() +
                                " box clear of ground truth");
      }
      ++counts.fp;
    }
  }
  return counts;
}

}  // namespace rdd
