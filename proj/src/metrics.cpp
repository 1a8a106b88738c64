#include "rdd/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "rdd/errors.hpp"
#include "text.hpp"

namespace rdd {

Detection::Detection(std::string image_id, DamageClass label, BoundingBox box, double score)
    : image_id_(std::move(image_id)), label_(std::move(label)), box_(box), score_(score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw InvariantError("detection score " + detail::format_double(score) + " on " + image_id_ +
                         " is outside [0, 1]");
  }
}

std::string_view averaging_name(Averaging a) noexcept {
  return a == Averaging::Micro ? "micro" : "macro-per-image";
}

std::optional<Averaging> parse_averaging(std::string_view name) noexcept {
  if (name == "micro") return Averaging::Micro;
  if (name == "macro" || name == "macro-per-image") return Averaging::MacroPerImage;
  return std::nullopt;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  // Integer percentages keep 0.60 etc. equal to their nearest doubles.
  for (int pct = 50; pct <= 95; pct += 5) t.push_back(pct / 100.0);
  return t;
}

namespace {

void check_threshold(double t, const char* what) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw ContractError(std::string(what) + " " + detail::format_double(t) +
                        " is outside (0, 1]");
  }
}

}  // namespace

void EvalConfig::validate() const {
  check_threshold(iou_threshold, "IoU threshold");
  if (whitelist.empty()) throw ContractError("class whitelist must not be empty");
  if (compute_ap) {
    if (ap_thresholds.empty()) throw ContractError("AP threshold list must not be empty");
    for (double t : ap_thresholds) check_threshold(t, "AP threshold");
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
  const double ih = std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

MatchOutcome match_detections(std::span<const Detection> detections,
                              std::span<const Annotation> ground_truth, double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score() > detections[b].score();
  });

  MatchOutcome out;
  std::vector<bool> claimed(ground_truth.size(), false);
  std::vector<bool> matched(detections.size(), false);
  for (const std::size_t d : order) {
    const auto& det = detections[d];
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (claimed[g] || ground_truth[g].label != det.label()) continue;
      const double v = iou(det.box(), ground_truth[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best && best_iou >= iou_threshold) {
      claimed[*best] = true;
      matched[d] = true;
      out.matches.push_back({d, *best, best_iou});
    }
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!matched[d]) out.unmatched_detections.push_back(d);
  }
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    if (!claimed[g]) out.unmatched_ground_truth.push_back(g);
  }
  return out;
}

MatchOutcome match_detections(std::span<const Detection> detections, const ImageRecord& image,
                              const EvalConfig& config) {
  config.validate();
  for (const auto& d : detections) {
    if (d.image_id() != image.image_id) {
      throw ContractError("detection for " + d.image_id() + " passed with ground truth of " +
                          image.image_id);
    }
  }
  return match_detections(detections, image.ground_truth, config.iou_threshold);
}

Scores f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  const auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  const double t = static_cast<double>(tp);
  Scores s;
  s.precision = ratio(t, t + static_cast<double>(fp));
  s.recall = ratio(t, t + static_cast<double>(fn));
  // Same value as 2pr/(p+r) without the intermediate rounding.
  s.f1 = ratio(2.0 * t, 2.0 * t + static_cast<double>(fp) + static_cast<double>(fn));
  return s;
}

namespace {

using ImageLookup = std::unordered_map<std::string_view, std::size_t>;

ImageLookup index_images(std::span<const ImageRecord> ground_truth) {
  ImageLookup lookup;
  lookup.reserve(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (!lookup.emplace(ground_truth[i].image_id, i).second) {
      throw InvariantError("duplicate ground-truth image id " + ground_truth[i].image_id);
    }
  }
  return lookup;
}

/// Detections grouped by ground-truth image, input order kept within a group.
std::vector<std::vector<Detection>> group_detections(std::span<const Detection> detections,
                                                     const ImageLookup& lookup,
                                                     std::size_t images,
                                                     const auto& keep) {
  std::vector<std::vector<Detection>> groups(images);
  std::set<std::string> unknown;
  for (const auto& d : detections) {
    const auto it = lookup.find(d.image_id());
    if (it == lookup.end()) {
      unknown.insert(d.image_id());
      continue;
    }
    if (keep(d.label())) groups[it->second].push_back(d);
  }
  if (!unknown.empty()) {
    std::string list;
    std::size_t shown = 0;
    for (const auto& id : unknown) {
      if (shown++ == 20) {
        list += ", ... (" + std::to_string(unknown.size()) + " total)";
        break;
      }
      list += (list.empty() ? "" : ", ") + id;
    }
    throw LookupError("detections reference images without ground truth: " + list);
  }
  return groups;
}

std::vector<Annotation> restrict_labels(const std::vector<Annotation>& gt, const auto& keep) {
  std::vector<Annotation> out;
  for (const auto& a : gt) {
    if (keep(a.label)) out.push_back(a);
  }
  return out;
}

struct ImageCounts {
  Counts all;
  std::map<DamageClass, Counts> per_class;
};

ImageCounts count_image(const std::vector<Detection>& dets, const std::vector<Annotation>& gt,
                        double threshold) {
  const auto outcome = match_detections(dets, gt, threshold);
  ImageCounts c;
  for (const auto& m : outcome.matches) ++c.per_class[dets[m.detection].label()].tp;
  for (const auto d : outcome.unmatched_detections) ++c.per_class[dets[d].label()].fp;
  for (const auto g : outcome.unmatched_ground_truth) ++c.per_class[gt[g].label].fn;
  c.all = {outcome.matches.size(), outcome.unmatched_detections.size(),
           outcome.unmatched_ground_truth.size()};
  return c;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const unsigned workers = std::clamp<unsigned>(jobs, 1, 64);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

/// Per-detection true-positive flags at one threshold, for detections of a
/// single class grouped per image.
std::vector<std::vector<bool>> tp_flags(const std::vector<std::vector<Detection>>& groups,
                                        const std::vector<std::vector<Annotation>>& gts,
                                        double threshold) {
  std::vector<std::vector<bool>> flags(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    flags[i].assign(groups[i].size(), false);
    const auto outcome = match_detections(groups[i], gts[i], threshold);
    for (const auto& m : outcome.matches) flags[i][m.detection] = true;
  }
  return flags;
}

}  // namespace

EvalReport evaluate(std::span<const Detection> detections,
                    std::span<const ImageRecord> ground_truth, const EvalConfig& config) {
  config.validate();
  const auto keep = [&](const DamageClass& c) { return config.whitelist.contains(c); };
  const auto lookup = index_images(ground_truth);
  const auto groups = group_detections(detections, lookup, ground_truth.size(), keep);

  std::vector<std::vector<Annotation>> gts(ground_truth.size());
  std::vector<ImageCounts> per_image(ground_truth.size());
  parallel_for(ground_truth.size(), config.jobs, [&](std::size_t i) {
    gts[i] = restrict_labels(ground_truth[i].ground_truth, keep);
    per_image[i] = count_image(groups[i], gts[i], config.iou_threshold);
  });

  EvalReport report;
  report.averaging = config.averaging;
  report.iou_threshold = config.iou_threshold;
  report.images = ground_truth.size();
  for (const auto& c : config.whitelist) report.per_class[c] = {};

  for (const auto& img : per_image) {
    report.counts += img.all;
    for (const auto& [label, c] : img.per_class) report.per_class[label].counts += c;
  }

  if (config.averaging == Averaging::Micro) {
    report.scores = f1_from_counts(report.counts);
    for (auto& [label, cr] : report.per_class) cr.scores = f1_from_counts(cr.counts);
  } else {
    const auto accumulate = [](Scores& acc, const Scores& s) {
      acc.precision += s.precision;
      acc.recall += s.recall;
      acc.f1 += s.f1;
    };
    const auto finish = [&](Scores& acc) {
      if (per_image.empty()) return;
      const double n = static_cast<double>(per_image.size());
      acc.precision /= n;
      acc.recall /= n;
      acc.f1 /= n;
    };
    for (const auto& img : per_image) {
      accumulate(report.scores, f1_from_counts(img.all));
      for (auto& [label, cr] : report.per_class) {
        const auto it = img.per_class.find(label);
        if (it != img.per_class.end()) accumulate(cr.scores, f1_from_counts(it->second));
      }
    }
    finish(report.scores);
    for (auto& [label, cr] : report.per_class) finish(cr.scores);
  }

  if (config.compute_ap) {
    std::map<DamageClass, std::optional<double>> table;
    for (const auto& c : config.whitelist) {
      table[c] = average_precision(detections, ground_truth, c, config.ap_thresholds);
    }
    report.ap_table = std::move(table);
  }
  return report;
}

std::optional<double> average_precision(std::span<const Detection> detections,
                                        std::span<const ImageRecord> ground_truth,
                                        const DamageClass& label,
                                        std::span<const double> thresholds) {
  if (thresholds.empty()) throw ContractError("AP threshold list must not be empty");
  for (double t : thresholds) check_threshold(t, "AP threshold");

  const auto keep = [&](const DamageClass& c) { return c == label; };
  const auto lookup = index_images(ground_truth);
  const auto groups = group_detections(detections, lookup, ground_truth.size(), keep);

  std::vector<std::vector<Annotation>> gts(ground_truth.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    gts[i] = restrict_labels(ground_truth[i].ground_truth, keep);
    positives += gts[i].size();
  }
  if (positives == 0) return std::nullopt;

  // Global ranking: descending score, ties by image then input position.
  struct Ref {
    std::size_t image, index;
    double score;
  };
  std::vector<Ref> ranked;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t k = 0; k < groups[i].size(); ++k) ranked.push_back({i, k, groups[i][k].score()});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ref& a, const Ref& b) { return a.score > b.score; });

  constexpr int kRecallPoints = 101;
  double sum = 0.0;
  for (const double threshold : thresholds) {
    const auto flags = tp_flags(groups, gts, threshold);
    std::vector<double> precision(ranked.size()), recall(ranked.size());
    std::size_t tp = 0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (flags[ranked[r].image][ranked[r].index]) ++tp;
      precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
      recall[r] = static_cast<double>(tp) / static_cast<double>(positives);
    }
    // Precision envelope: best precision at any equal-or-higher recall.
    for (std::size_t r = precision.size(); r > 1; --r) {
      precision[r - 2] = std::max(precision[r - 2], precision[r - 1]);
    }
    double area = 0.0;
    for (int p = 0; p < kRecallPoints; ++p) {
      const double target = p / 100.0;
      const auto it = std::lower_bound(recall.begin(), recall.end(), target);
      if (it != recall.end()) area += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    sum += area / kRecallPoints;
  }
  return sum / static_cast<double>(thresholds.size());
}

}  // namespace rdd
