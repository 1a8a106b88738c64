#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rdd {

/// Axis-aligned box in pixel coordinates. Construction enforces
/// xmin < xmax, ymin < ymax and non-negative coordinates; a BoundingBox
/// that exists is always valid.
class BoundingBox {
 public:
  BoundingBox(double xmin, double ymin, double xmax, double ymax);

  double xmin() const noexcept { return xmin_; }
  double ymin() const noexcept { return ymin_; }
  double xmax() const noexcept { return xmax_; }
  double ymax() const noexcept { return ymax_; }
  double width() const noexcept { return xmax_ - xmin_; }
  double height() const noexcept { return ymax_ - ymin_; }
  // Continuous area, no +1 pixel convention.
  double area() const noexcept { return width() * height(); }

  /// Returns the box with every coordinate multiplied by `factor` (> 0).
  BoundingBox scaled(double factor) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double xmin_, ymin_, xmax_, ymax_;
};

/// Damage label. Holds the raw code text so that non-whitelisted labels
/// (D01, D11, D43, D44, anything else) survive parsing untouched.
class DamageClass {
 public:
  enum class Known { D00, D10, D20, D40 };

  explicit DamageClass(std::string code);
  DamageClass(Known known);  // NOLINT(google-explicit-constructor)

  const std::string& code() const noexcept { return code_; }
  std::optional<Known> known() const noexcept;
  /// Human name for the four whitelisted codes, empty otherwise.
  std::string_view name() const noexcept;

  friend bool operator==(const DamageClass&, const DamageClass&) = default;
  friend auto operator<=>(const DamageClass&, const DamageClass&) = default;

 private:
  std::string code_;
};

using ClassSet = std::set<DamageClass>;

/// D00, D10, D20, D40.
const ClassSet& default_whitelist();
/// The four whitelisted classes in canonical order.
const std::vector<DamageClass>& whitelisted_classes();

enum class Country { CZ, IN, JP };

std::string_view country_code(Country c) noexcept;
std::optional<Country> parse_country_code(std::string_view code) noexcept;
/// Czech_ / India_ / Japan_ filename prefixes.
std::optional<Country> country_from_filename(std::string_view filename) noexcept;
/// Matches a directory name such as "Czech" or "Japan".
std::optional<Country> country_from_directory(std::string_view dirname) noexcept;

struct Annotation {
  DamageClass label;
  BoundingBox box;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ImageRecord {
  std::string image_id;
  Country country = Country::JP;
  int width = 0;
  int height = 0;
  std::vector<Annotation> ground_truth;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Throws InvariantError if dimensions are not positive or any box falls
/// outside [0,width]x[0,height].
void validate(const ImageRecord& record);

/// Parses one VOC annotation document. The country comes from
/// `country_override` when given, otherwise from the filename prefix, and
/// finally from `country_fallback` (e.g. the enclosing directory name).
ImageRecord parse_voc_annotation(std::string_view xml_text,
                                 std::optional<Country> country_override = std::nullopt,
                                 std::optional<Country> country_fallback = std::nullopt);

/// Serializes back to the VOC layout; parse_voc_annotation inverts it.
std::string to_voc_xml(const ImageRecord& record);

struct NormalizedRecord {
  ImageRecord record;
  std::size_t dropped = 0;
};

/// Keeps only ground-truth entries whose label is in `whitelist`.
NormalizedRecord normalize_labels(const ImageRecord& record,
                                  const ClassSet& whitelist = default_whitelist());

}  // namespace rdd
