#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdd/annotations.hpp"

namespace rdd {

/// A predicted box. Construction enforces score in [0, 1].
class Detection {
 public:
  Detection(std::string image_id, DamageClass label, BoundingBox box, double score);

  const std::string& image_id() const noexcept { return image_id_; }
  const DamageClass& label() const noexcept { return label_; }
  const BoundingBox& box() const noexcept { return box_; }
  double score() const noexcept { return score_; }

  friend bool operator==(const Detection&, const Detection&) = default;

 private:
  std::string image_id_;
  DamageClass label_;
  BoundingBox box_;
  double score_;
};

enum class Averaging {
  Micro,         ///< pool tp/fp/fn over all images, then compute F1
  MacroPerImage  ///< average the per-image precision, recall and F1
};

std::string_view averaging_name(Averaging a) noexcept;
std::optional<Averaging> parse_averaging(std::string_view name) noexcept;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

struct EvalConfig {
  double iou_threshold = 0.5;
  Averaging averaging = Averaging::Micro;
  ClassSet whitelist = default_whitelist();
  /// Fill EvalReport::ap_table using `ap_thresholds`.
  bool compute_ap = false;
  std::vector<double> ap_thresholds = coco_iou_thresholds();
  /// Worker threads for per-image matching; results do not depend on it.
  unsigned jobs = 1;

  /// Throws ContractError when a field is out of range.
  void validate() const;
};

struct Match {
  std::size_t detection;
  std::size_t ground_truth;
  double iou;
};

struct MatchOutcome {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::size_t> unmatched_ground_truth;
};

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend Counts operator+(Counts a, const Counts& b) { return a += b; }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const Scores&, const Scores&) = default;
};

struct ClassReport {
  Counts counts;
  Scores scores;
};

struct EvalReport {
  Counts counts;
  Scores scores;
  Averaging averaging = Averaging::Micro;
  double iou_threshold = 0.5;
  std::size_t images = 0;
  std::map<DamageClass, ClassReport> per_class;
  /// Present when requested; a class without ground truth maps to nullopt.
  std::optional<std::map<DamageClass, std::optional<double>>> ap_table;
};

/// Intersection over union with the continuous area convention.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Greedy matching for one image: detections in descending score order (ties
/// by input order) each claim the unclaimed same-class ground truth of
/// highest IoU (ties by lower index), if that IoU reaches the threshold.
MatchOutcome match_detections(std::span<const Detection> detections,
                              std::span<const Annotation> ground_truth, double iou_threshold);

/// As above; throws ContractError if a detection belongs to another image.
MatchOutcome match_detections(std::span<const Detection> detections, const ImageRecord& image,
                              const EvalConfig& config);

/// Precision, recall and F1 with 0/0 taken as 0.
Scores f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;
inline Scores f1_from_counts(const Counts& c) noexcept { return f1_from_counts(c.tp, c.fp, c.fn); }

/// Scores `detections` against `ground_truth`. Both sides are restricted to
/// `config.whitelist`. Throws LookupError listing detections whose image is
/// not in `ground_truth`.
EvalReport evaluate(std::span<const Detection> detections,
                    std::span<const ImageRecord> ground_truth, const EvalConfig& config = {});

/// Mean over `thresholds` of the 101-point interpolated AP for `label`.
/// nullopt when `label` has no ground-truth instance.
std::optional<double> average_precision(std::span<const Detection> detections,
                                        std::span<const ImageRecord> ground_truth,
                                        const DamageClass& label,
                                        std::span<const double> thresholds);

inline std::optional<double> average_precision(std::span<const Detection> detections,
                                               std::span<const ImageRecord> ground_truth,
                                               const DamageClass& label) {
  const auto t = coco_iou_thresholds();
  return average_precision(detections, ground_truth, label, t);
}

}  // namespace rdd
