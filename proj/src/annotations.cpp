#include "rdd/annotations.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "rdd/errors.hpp"
#include "text.hpp"

namespace rdd {

namespace pt = boost::property_tree;

BoundingBox::BoundingBox(double xmin, double ymin, double xmax, double ymax)
    : xmin_(xmin), ymin_(ymin), xmax_(xmax), ymax_(ymax) {
  const bool finite = std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) &&
                      std::isfinite(ymax);
  if (!finite || xmin < 0.0 || ymin < 0.0 || !(xmin < xmax) || !(ymin < ymax)) {
    throw InvariantError("invalid box (" + detail::format_double(xmin) + ", " +
                         detail::format_double(ymin) + ", " + detail::format_double(xmax) +
                         ", " + detail::format_double(ymax) + ")");
  }
}

BoundingBox BoundingBox::scaled(double factor) const {
  if (!(factor > 0.0)) throw ContractError("scale factor must be positive");
  return {xmin_ * factor, ymin_ * factor, xmax_ * factor, ymax_ * factor};
}

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kKnownNames = {{
    {"D00", "Longitudinal Crack"},
    {"D10", "Transverse Crack"},
    {"D20", "Alligator Crack"},
    {"D40", "Pothole"},
}};

constexpr std::array<std::pair<std::string_view, Country>, 3> kCountryPrefixes = {{
    {"Czech", Country::CZ},
    {"India", Country::IN},
    {"Japan", Country::JP},
}};

}  // namespace

DamageClass::DamageClass(std::string code) : code_(detail::trim(code)) {}

DamageClass::DamageClass(Known known)
    : code_(kKnownNames[static_cast<std::size_t>(known)].first) {}

std::optional<DamageClass::Known> DamageClass::known() const noexcept {
  for (std::size_t i = 0; i < kKnownNames.size(); ++i) {
    if (kKnownNames[i].first == code_) return static_cast<Known>(i);
  }
  return std::nullopt;
}

std::string_view DamageClass::name() const noexcept {
  const auto k = known();
  return k ? kKnownNames[static_cast<std::size_t>(*k)].second : std::string_view{};
}

const std::vector<DamageClass>& whitelisted_classes() {
  static const std::vector<DamageClass> classes = {
      DamageClass::Known::D00, DamageClass::Known::D10, DamageClass::Known::D20,
      DamageClass::Known::D40};
  return classes;
}

const ClassSet& default_whitelist() {
  static const ClassSet set(whitelisted_classes().begin(), whitelisted_classes().end());
  return set;
}

std::string_view country_code(Country c) noexcept {
  switch (c) {
    case Country::CZ: return "CZ";
    case Country::IN: return "IN";
    case Country::JP: return "JP";
  }
  return "??";
}

std::optional<Country> parse_country_code(std::string_view code) noexcept {
  if (code == "CZ") return Country::CZ;
  if (code == "IN") return Country::IN;
  if (code == "JP") return Country::JP;
  return std::nullopt;
}

std::optional<Country> country_from_filename(std::string_view filename) noexcept {
  for (const auto& [prefix, country] : kCountryPrefixes) {
    if (filename.size() > prefix.size() && filename.substr(0, prefix.size()) == prefix &&
        filename[prefix.size()] == '_') {
      return country;
    }
  }
  return std::nullopt;
}

std::optional<Country> country_from_directory(std::string_view dirname) noexcept {
  for (const auto& [prefix, country] : kCountryPrefixes) {
    if (dirname == prefix) return country;
  }
  return std::nullopt;
}

void validate(const ImageRecord& record) {
  if (record.width <= 0 || record.height <= 0) {
    throw InvariantError(record.image_id + ": image size must be positive");
  }
  for (const auto& a : record.ground_truth) {
    const auto& b = a.box;
    if (b.xmax() > record.width || b.ymax() > record.height) {
      throw InvariantError(record.image_id + ": box (" + detail::format_double(b.xmin()) + ", " +
                           detail::format_double(b.ymin()) + ", " +
                           detail::format_double(b.xmax()) + ", " +
                           detail::format_double(b.ymax()) + ") of " + a.label.code() +
                           " lies outside the " + std::to_string(record.width) + "x" +
                           std::to_string(record.height) + " image");
    }
  }
}

namespace {

const pt::ptree& require_child(const pt::ptree& node, const std::string& path,
                               const std::string& full_path) {
  const auto child = node.get_child_optional(pt::ptree::path_type(path, '/'));
  if (!child) throw SchemaError("missing required element <" + full_path + ">");
  return *child;
}

double require_number(const pt::ptree& node, const std::string& path,
                      const std::string& full_path) {
  const std::string text = detail::trim(require_child(node, path, full_path).data());
  const auto value = detail::parse_double(text);
  if (!value) throw SchemaError("element <" + full_path + "> is not a number: '" + text + "'");
  return *value;
}

int require_dimension(const pt::ptree& size, const std::string& name) {
  const std::string full = "annotation/size/" + name;
  const double v = require_number(size, name, full);
  if (v != std::floor(v) || v <= 0.0 || v > 1e9) {
    throw SchemaError("element <" + full + "> must be a positive integer");
  }
  return static_cast<int>(v);
}

}  // namespace

ImageRecord parse_voc_annotation(std::string_view xml_text,
                                 std::optional<Country> country_override,
                                 std::optional<Country> country_fallback) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }

  const auto& root = require_child(tree, "annotation", "annotation");

  ImageRecord record;
  record.image_id = detail::trim(require_child(root, "filename", "annotation/filename").data());
  if (record.image_id.empty()) throw SchemaError("element <annotation/filename> is empty");

  if (country_override) {
    record.country = *country_override;
  } else if (const auto c = country_from_filename(record.image_id)) {
    record.country = *c;
  } else if (country_fallback) {
    record.country = *country_fallback;
  } else {
    throw SchemaError(record.image_id + ": cannot derive country from filename prefix");
  }

  const auto& size = require_child(root, "size", "annotation/size");
  record.width = require_dimension(size, "width");
  record.height = require_dimension(size, "height");

  for (const auto& [tag, node] : root) {
    if (tag != "object") continue;
    const std::string label =
        detail::trim(require_child(node, "name", "annotation/object/name").data());
    if (label.empty()) throw SchemaError("element <annotation/object/name> is empty");
    const auto& bb = require_child(node, "bndbox", "annotation/object/bndbox");
    const double xmin = require_number(bb, "xmin", "annotation/object/bndbox/xmin");
    const double ymin = require_number(bb, "ymin", "annotation/object/bndbox/ymin");
    const double xmax = require_number(bb, "xmax", "annotation/object/bndbox/xmax");
    const double ymax = require_number(bb, "ymax", "annotation/object/bndbox/ymax");
    try {
      record.ground_truth.push_back({DamageClass(label), BoundingBox(xmin, ymin, xmax, ymax)});
    } catch (const InvariantError& e) {
      throw InvariantError(record.image_id + ": " + e.what() + " for object " +
                           std::to_string(record.ground_truth.size() + 1) + " (" + label + ")");
    }
  }

  validate(record);
  return record;
}

std::string to_voc_xml(const ImageRecord& record) {
  std::string out;
  out += "<annotation>\n";
  out += "  <filename>" + detail::xml_escape(record.image_id) + "</filename>\n";
  out += "  <size>\n";
  out += "    <width>" + std::to_string(record.width) + "</width>\n";
  out += "    <height>" + std::to_string(record.height) + "</height>\n";
  out += "    <depth>3</depth>\n";
  out += "  </size>\n";
  for (const auto& a : record.ground_truth) {
    out += "  <object>\n";
    out += "    <name>" + detail::xml_escape(a.label.code()) + "</name>\n";
    out += "    <bndbox>\n";
    out += "      <xmin>" + detail::format_double(a.box.xmin()) + "</xmin>\n";
    out += "      <ymin>" + detail::format_double(a.box.ymin()) + "</ymin>\n";
    out += "      <xmax>" + detail::format_double(a.box.xmax()) + "</xmax>\n";
    out += "      <ymax>" + detail::format_double(a.box.ymax()) + "</ymax>\n";
    out += "    </bndbox>\n";
    out += "  </object>\n";
  }
  out += "</annotation>\n";
  return out;
}

NormalizedRecord normalize_labels(const ImageRecord& record, const ClassSet& whitelist) {
  if (whitelist.empty()) throw ContractError("normalize_labels: whitelist must not be empty");
  NormalizedRecord result{record, 0};
  auto& gt = result.record.ground_truth;
  const auto kept = std::remove_if(gt.begin(), gt.end(), [&](const Annotation& a) {
    return !whitelist.contains(a.label);
  });
  result.dropped = static_cast<std::size_t>(std::distance(kept, gt.end()));
  gt.erase(kept, gt.end());
  return result;
}

}  // namespace rdd
