#include "rdd/postprocess.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "rdd/errors.hpp"
#include "text.hpp"

namespace rdd {

void PostprocessConfig::validate() const {
  if (!(min_score >= 0.0 && min_score <= 1.0)) {
    throw ContractError("min_score " + detail::format_double(min_score) + " is outside [0, 1]");
  }
  if (top_k && *top_k == 0) throw ContractError("top_k must be at least 1");
}

std::vector<Detection> filter_by_confidence(std::span<const Detection> detections,
                                            double min_score) {
  if (!(min_score >= 0.0 && min_score <= 1.0)) {
    throw ContractError("min_score " + detail::format_double(min_score) + " is outside [0, 1]");
  }
  std::vector<Detection> out;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(out),
               [&](const Detection& d) { return d.score() >= min_score; });
  return out;
}

std::vector<Detection> top_k_per_image(std::span<const Detection> detections, std::size_t k) {
  if (k == 0) throw ContractError("top_k must be at least 1");

  std::vector<std::string_view> image_order;
  std::map<std::string_view, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    auto& bucket = by_image[detections[i].image_id()];
    if (bucket.empty()) image_order.push_back(detections[i].image_id());
    bucket.push_back(i);
  }

  std::vector<Detection> out;
  out.reserve(detections.size());
  for (const auto image : image_order) {
    auto& idx = by_image[image];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return detections[a].score() > detections[b].score();
    });
    const std::size_t n = std::min(k, idx.size());
    for (std::size_t j = 0; j < n; ++j) out.push_back(detections[idx[j]]);
  }
  return out;
}

std::vector<Detection> postprocess(std::span<const Detection> detections,
                                   const PostprocessConfig& config) {
  config.validate();
  auto kept = filter_by_confidence(detections, config.min_score);
  if (!config.top_k) return kept;
  return top_k_per_image(kept, *config.top_k);
}

SweepResult sweep_threshold(std::span<const Detection> detections,
                            std::span<const ImageRecord> ground_truth,
                            std::span<const double> grid, const EvalConfig& eval_config,
                            std::optional<std::size_t> top_k) {
  if (grid.empty()) throw ContractError("sweep grid must not be empty");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ContractError("sweep grid must be sorted ascending");
  }

  EvalConfig config = eval_config;
  config.compute_ap = false;

  SweepResult result{grid.front(), {}};
  double best_f1 = -1.0;
  for (const double t : grid) {
    const auto kept = postprocess(detections, {t, top_k});
    const double f1 = evaluate(kept, ground_truth, config).scores.f1;
    result.curve.push_back({t, f1});
    if (f1 > best_f1) {
      best_f1 = f1;
      result.best_threshold = t;
    }
  }
  return result;
}

}  // namespace rdd
