#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rdd/annotations.hpp"
#include "rdd/metrics.hpp"

namespace rdd::fixtures {

inline Annotation ann(const char* code, double x0, double y0, double x1, double y1) {
  return {DamageClass(code), BoundingBox(x0, y0, x1, y1)};
}

inline ImageRecord image(std::string id, std::vector<Annotation> gt, int w = 600, int h = 600) {
  ImageRecord r;
  r.image_id = std::move(id);
  r.country = country_from_filename(r.image_id).value_or(Country::JP);
  r.width = w;
  r.height = h;
  r.ground_truth = std::move(gt);
  return r;
}

inline Detection det(const std::string& image_id, const char* code, double x0, double y0,
                     double x1, double y1, double score) {
  return Detection(image_id, DamageClass(code), BoundingBox(x0, y0, x1, y1), score);
}

/// Ground truth echoed as detections with a fixed score.
inline std::vector<Detection> echo(const std::vector<ImageRecord>& gts, double score = 1.0) {
  std::vector<Detection> out;
  for (const auto& r : gts) {
    for (const auto& a : r.ground_truth) out.emplace_back(r.image_id, a.label, a.box, score);
  }
  return out;
}

inline std::string voc_xml(const std::string& filename, int w, int h,
                           const std::vector<std::pair<std::string, std::array<int, 4>>>& objects) {
  std::string s = "<?xml version=\"1.0\"?>\n<annotation>\n  <folder>images</folder>\n";
  s += "  <filename>" + filename + "</filename>\n";
  s += "  <size><width>" + std::to_string(w) + "</width><height>" + std::to_string(h) +
       "</height><depth>3</depth></size>\n  <segmented>0</segmented>\n";
  for (const auto& [name, b] : objects) {
    s += "  <object>\n    <name>" + name + "</name>\n    <pose>Unspecified</pose>\n";
    s += "    <truncated>0</truncated>\n    <difficult>0</difficult>\n    <bndbox>\n";
    s += "      <xmin>" + std::to_string(b[0]) + "</xmin>\n      <ymin>" + std::to_string(b[1]) +
         "</ymin>\n";
    s += "      <xmax>" + std::to_string(b[2]) + "</xmax>\n      <ymax>" + std::to_string(b[3]) +
         "</ymax>\n";
    s += "    </bndbox>\n  </object>\n";
  }
  s += "</annotation>\n";
  return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rddbench-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Country directory layout used by the public dataset release.
inline std::filesystem::path annotation_path(const std::filesystem::path& root,
                                             const std::string& country_dir,
                                             const std::string& stem) {
  return root / country_dir / "annotations" / "xmls" / (stem + ".xml");
}

/// Writes `count` stub annotation files for a country, named Country_000001..
inline void write_country_stubs(const std::filesystem::path& root, const std::string& country_dir,
                                int count) {
  for (int i = 1; i <= count; ++i) {
    char stem[64];
    std::snprintf(stem, sizeof(stem), "%s_%06d", country_dir.c_str(), i);
    write_text(annotation_path(root, country_dir, stem),
               voc_xml(std::string(stem) + ".jpg", 600, 600, {{"D00", {10, 10, 50, 50}}}));
  }
}

/// Random image with up to `max_boxes` boxes of the four whitelisted classes.
inline ImageRecord random_image(std::mt19937_64& rng, const std::string& id, int max_boxes) {
  std::uniform_int_distribution<int> count(0, max_boxes), cls(0, 3), pos(0, 560), size(8, 200);
  std::vector<Annotation> gt;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const int x = pos(rng), y = pos(rng);
    const int x1 = std::min(600, x + size(rng)), y1 = std::min(600, y + size(rng));
    gt.push_back({whitelisted_classes()[cls(rng)], BoundingBox(x, y, x1, y1)});
  }
  return image(id, std::move(gt));
}

}  // namespace rdd::fixtures
