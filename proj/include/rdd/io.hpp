#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rdd/metrics.hpp"

namespace rdd {

// Detection interchange: one JSON object per line,
//   {"image":"Japan_000001.jpg","class":"D20","bbox":[100,200,300,400],"score":0.87}
// Blank lines are ignored. Coordinates keep full precision.

std::vector<Detection> parse_detections(std::istream& in);
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::string format_detection(const Detection& d);
void write_detections(std::span<const Detection> detections, std::ostream& out);
void write_detections(std::span<const Detection> detections, const std::filesystem::path& path);

/// Maps a damage class to the token written in submission rows.
class LabelEncoding {
 public:
  /// The class code itself ("D20").
  static LabelEncoding code();
  /// 1..4 in D00, D10, D20, D40 order.
  static LabelEncoding index();
  static LabelEncoding custom(std::map<DamageClass, std::string> tokens);

  /// Throws EncodingError for an unmapped class.
  std::string token(const DamageClass& label) const;
  /// Inverse of token(); throws EncodingError for an unknown token.
  DamageClass label(std::string_view token) const;

 private:
  bool passthrough_ = false;
  std::map<DamageClass, std::string> tokens_;
};

struct SubmissionPrediction {
  std::string label;  ///< encoded token
  long long xmin, ymin, xmax, ymax;

  friend bool operator==(const SubmissionPrediction&, const SubmissionPrediction&) = default;
};

struct SubmissionRow {
  std::string image_name;
  std::vector<SubmissionPrediction> predictions;

  friend bool operator==(const SubmissionRow&, const SubmissionRow&) = default;
};

struct SubmissionOptions {
  /// Emit "name," rows for these images when they have no detections.
  bool include_empty = false;
  std::vector<std::string> all_images;
};

/// Rows sorted by image name; predictions in descending score order (ties by
/// input order). Coordinates rounded half away from zero.
std::vector<SubmissionRow> build_submission(std::span<const Detection> detections,
                                            const LabelEncoding& encoding,
                                            const SubmissionOptions& options = {});

std::string format_submission_row(const SubmissionRow& row);
void write_submission_rows(std::span<const SubmissionRow> rows, std::ostream& out);

/// Writes the submission file and returns the number of rows written.
std::size_t write_submission(std::span<const Detection> detections, const LabelEncoding& encoding,
                             const std::filesystem::path& path,
                             const SubmissionOptions& options = {});

std::vector<SubmissionRow> parse_submission(std::istream& in);
std::vector<SubmissionRow> read_submission(const std::filesystem::path& path);

}  // namespace rdd
