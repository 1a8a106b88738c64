#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rdd/metrics.hpp"

namespace rdd {

struct ScoreModel {
  enum class Kind { Constant, Uniform };

  Kind kind = Kind::Constant;
  double lo = 1.0;  ///< the constant, or the lower bound of the range
  double hi = 1.0;

  static ScoreModel constant(double value) { return {Kind::Constant, value, value}; }
  static ScoreModel uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
};

struct PerturbParams {
  /// Maximum displacement of each coordinate, in pixels.
  double jitter = 0.0;
  /// Drop the k-th, 2k-th, ... ground-truth box of every image (1-based).
  std::optional<std::size_t> drop_every_k;
  /// False boxes added per image, with zero overlap against ground truth of
  /// their class. Their classes cycle through D00, D10, D20, D40.
  std::size_t fp_per_image = 0;
  ScoreModel score;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PerturbResult {
  std::vector<Detection> detections;
  /// Boxes for which no valid jittered box was drawn; emitted unjittered.
  std::size_t jitter_fallbacks = 0;
  /// False boxes that could not avoid overlapping same-class ground truth.
  std::size_t forced_overlaps = 0;
};

/// Synthetic detections derived from ground truth. Deterministic in
/// (ground_truth, params); each image draws from its own sub-seed.
PerturbResult perturb(std::span<const ImageRecord> ground_truth, const PerturbParams& params);

/// Largest per-coordinate displacement d for which every displaced copy of
/// `box` is guaranteed IoU >= iou_threshold with it:
/// (w-2d)(h-2d) >= t (w+2d)(h+2d).
double max_safe_jitter(const BoundingBox& box, double iou_threshold = 0.5);

/// Guaranteed IoU lower bound between `box` and any copy displaced by at most
/// `jitter` per coordinate. 0 when the displaced copy could be empty.
double jitter_iou_lower_bound(const BoundingBox& box, double jitter);

/// Exact (tp, fp, fn) that evaluate(perturb(ground_truth, params)) must
/// produce at `iou_threshold` over `whitelist`. Throws UnsafeParamsError when
/// the parameters leave the regime where these counts are guaranteed.
Counts expected_counts(std::span<const ImageRecord> ground_truth, const PerturbParams& params,
                       double iou_threshold = 0.5, const ClassSet& whitelist = default_whitelist());

}  // namespace rdd
