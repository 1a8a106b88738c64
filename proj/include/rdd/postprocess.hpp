#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rdd/metrics.hpp"

namespace rdd {

struct PostprocessConfig {
  double min_score = 0.7;
  /// nullopt keeps every detection.
  std::optional<std::size_t> top_k = 5;

  void validate() const;
};

/// Detections with score >= min_score, input order kept.
std::vector<Detection> filter_by_confidence(std::span<const Detection> detections,
                                            double min_score);

/// Per image, the k highest-scored detections (ties by input order). Images
/// appear in order of first occurrence, each sorted by descending score.
std::vector<Detection> top_k_per_image(std::span<const Detection> detections, std::size_t k);

/// filter -> sort -> top-k.
std::vector<Detection> postprocess(std::span<const Detection> detections,
                                   const PostprocessConfig& config = {});

struct SweepPoint {
  double threshold;
  double f1;
};

struct SweepResult {
  double best_threshold;
  std::vector<SweepPoint> curve;
};

/// Evaluates F1 after postprocessing at each threshold of `grid` (ascending).
/// Ties resolve to the lowest threshold.
SweepResult sweep_threshold(std::span<const Detection> detections,
                            std::span<const ImageRecord> ground_truth,
                            std::span<const double> grid, const EvalConfig& eval_config = {},
                            std::optional<std::size_t> top_k = std::nullopt);

}  // namespace rdd
