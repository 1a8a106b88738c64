#include "rdd/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "rdd/errors.hpp"
#include "text.hpp"

namespace rdd {

namespace fs = std::filesystem;

namespace {

Detection detection_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("expected a JSON object", line);
  const auto field = [&](const char* name) -> const nlohmann::json& {
    const auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'", line);
    return *it;
  };
  const auto& image = field("image");
  const auto& label = field("class");
  const auto& bbox = field("bbox");
  const auto& score = field("score");
  if (!image.is_string()) throw ParseError("'image' must be a string", line);
  if (!label.is_string()) throw ParseError("'class' must be a string", line);
  if (!bbox.is_array() || bbox.size() != 4 ||
      !std::all_of(bbox.begin(), bbox.end(), [](const auto& v) { return v.is_number(); })) {
    throw ParseError("'bbox' must be an array of four numbers", line);
  }
  if (!score.is_number()) throw ParseError("'score' must be a number", line);

  try {
    return Detection(image.get<std::string>(), DamageClass(label.get<std::string>()),
                     BoundingBox(bbox[0].get<double>(), bbox[1].get<double>(),
                                 bbox[2].get<double>(), bbox[3].get<double>()),
                     score.get<double>());
  } catch (const InvariantError& e) {
    throw InvariantError("line " + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace

std::vector<Detection> parse_detections(std::istream& in) {
  std::vector<Detection> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::trim(text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
    out.push_back(detection_from_json(j, line));
  }
  if (in.bad()) throw IoError("error while reading detections");
  return out;
}

std::vector<Detection> read_detections(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return parse_detections(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(path.string() + ": " + e.what());
  }
}

std::string format_detection(const Detection& d) {
  nlohmann::ordered_json j;
  j["image"] = d.image_id();
  j["class"] = d.label().code();
  j["bbox"] = {d.box().xmin(), d.box().ymin(), d.box().xmax(), d.box().ymax()};
  j["score"] = d.score();
  return j.dump();
}

void write_detections(std::span<const Detection> detections, std::ostream& out) {
  for (const auto& d : detections) out << format_detection(d) << '\n';
}

void write_detections(std::span<const Detection> detections, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_detections(detections, out);
  out.flush();
  if (!out) throw IoError("error while writing " + path.string());
}

LabelEncoding LabelEncoding::code() {
  LabelEncoding e;
  e.passthrough_ = true;
  return e;
}

LabelEncoding LabelEncoding::index() {
  std::map<DamageClass, std::string> tokens;
  const auto& classes = whitelisted_classes();
  for (std::size_t i = 0; i < classes.size(); ++i) tokens[classes[i]] = std::to_string(i + 1);
  return custom(std::move(tokens));
}

LabelEncoding LabelEncoding::custom(std::map<DamageClass, std::string> tokens) {
  for (const auto& [label, token] : tokens) {
    if (token.empty() || token.find_first_of(" ,\t\r\n") != std::string::npos) {
      throw EncodingError("token for " + label.code() + " must be non-empty without separators");
    }
  }
  LabelEncoding e;
  e.tokens_ = std::move(tokens);
  return e;
}

std::string LabelEncoding::token(const DamageClass& label) const {
  if (passthrough_) return label.code();
  const auto it = tokens_.find(label);
  if (it == tokens_.end()) throw EncodingError("class " + label.code() + " has no output token");
  return it->second;
}

DamageClass LabelEncoding::label(std::string_view token) const {
  if (passthrough_) return DamageClass(std::string(token));
  for (const auto& [label, t] : tokens_) {
    if (t == token) return label;
  }
  throw EncodingError("unknown label token '" + std::string(token) + "'");
}

namespace {

long long round_coordinate(double v) { return static_cast<long long>(std::round(v)); }

SubmissionPrediction encode(const Detection& d, const LabelEncoding& encoding) {
  SubmissionPrediction p{encoding.token(d.label()), round_coordinate(d.box().xmin()),
                         round_coordinate(d.box().ymin()), round_coordinate(d.box().xmax()),
                         round_coordinate(d.box().ymax())};
  // Boxes thinner than a pixel can round to zero width.
  if (p.xmax <= p.xmin) p.xmax = p.xmin + 1;
  if (p.ymax <= p.ymin) p.ymax = p.ymin + 1;
  return p;
}

}  // namespace

std::vector<SubmissionRow> build_submission(std::span<const Detection> detections,
                                            const LabelEncoding& encoding,
                                            const SubmissionOptions& options) {
  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    by_image[detections[i].image_id()].push_back(i);
  }
  if (options.include_empty) {
    for (const auto& name : options.all_images) by_image.try_emplace(name);
  }

  std::vector<SubmissionRow> rows;
  rows.reserve(by_image.size());
  for (auto& [image, idx] : by_image) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return detections[a].score() > detections[b].score();
    });
    SubmissionRow row{image, {}};
    for (const auto i : idx) row.predictions.push_back(encode(detections[i], encoding));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_submission_row(const SubmissionRow& row) {
  std::string line = row.image_name + ",";
  for (std::size_t i = 0; i < row.predictions.size(); ++i) {
    const auto& p = row.predictions[i];
    if (i > 0) line += ' ';
    line += p.label + ' ' + std::to_string(p.xmin) + ' ' + std::to_string(p.ymin) + ' ' +
            std::to_string(p.xmax) + ' ' + std::to_string(p.ymax);
  }
  return line;
}

void write_submission_rows(std::span<const SubmissionRow> rows, std::ostream& out) {
  for (const auto& row : rows) out << format_submission_row(row) << '\n';
}

std::size_t write_submission(std::span<const Detection> detections, const LabelEncoding& encoding,
                             const fs::path& path, const SubmissionOptions& options) {
  const auto rows = build_submission(detections, encoding, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_submission_rows(rows, out);
  out.flush();
  if (!out) throw IoError("error while writing " + path.string());
  return rows.size();
}

std::vector<SubmissionRow> parse_submission(std::istream& in) {
  std::vector<SubmissionRow> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (detail::trim(text).empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw ParseError("expected 'image_name,predictions'", line);
    }
    SubmissionRow row{text.substr(0, comma), {}};
    std::vector<std::string> fields;
    std::istringstream tokens(text.substr(comma + 1));
    for (std::string t; tokens >> t;) fields.push_back(t);
    if (fields.size() % 5 != 0) {
      throw ParseError("prediction list must hold groups of five fields", line);
    }
    for (std::size_t i = 0; i < fields.size(); i += 5) {
      SubmissionPrediction p{fields[i], 0, 0, 0, 0};
      long long* coords[] = {&p.xmin, &p.ymin, &p.xmax, &p.ymax};
      for (std::size_t c = 0; c < 4; ++c) {
        const auto v = detail::parse_int(fields[i + 1 + c]);
        if (!v) throw ParseError("coordinate '" + fields[i + 1 + c] + "' is not an integer", line);
        *coords[c] = *v;
      }
      if (p.xmin < 0 || p.ymin < 0 || p.xmax <= p.xmin || p.ymax <= p.ymin) {
        throw InvariantError("line " + std::to_string(line) + ": invalid box for " + p.label);
      }
      row.predictions.push_back(std::move(p));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SubmissionRow> read_submission(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return parse_submission(in);
}

}  // namespace rdd
