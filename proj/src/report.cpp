#include "rdd/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

#include "text.hpp"

namespace rdd {

namespace {

nlohmann::ordered_json counts_json(const Counts& c) {
  nlohmann::ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  return j;
}

void put_scores(nlohmann::ordered_json& j, const Scores& s) {
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::optional<double> mean_average_precision(const EvalReport& report) {
  if (!report.ap_table) return std::nullopt;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [label, v] : *report.ap_table) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

namespace {

nlohmann::ordered_json sweep_json(const SweepResult& sweep) {
  nlohmann::ordered_json j;
  j["best_threshold"] = sweep.best_threshold;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& p : sweep.curve) {
    nlohmann::ordered_json point;
    point["threshold"] = p.threshold;
    point["f1"] = p.f1;
    curve.push_back(point);
  }
  j["curve"] = curve;
  return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report, const std::optional<SweepResult>& sweep) {
  nlohmann::ordered_json j;
  j["averaging"] = std::string(averaging_name(report.averaging));
  j["iou_threshold"] = report.iou_threshold;
  j["images"] = report.images;
  j.update(counts_json(report.counts));
  put_scores(j, report.scores);
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (const auto& [label, cr] : report.per_class) {
    auto c = counts_json(cr.counts);
    put_scores(c, cr.scores);
    classes[label.code()] = c;
  }
  j["per_class"] = classes;
  if (report.ap_table) {
    nlohmann::ordered_json ap = nlohmann::ordered_json::object();
    for (const auto& [label, v] : *report.ap_table) {
      ap[label.code()] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    }
    j["ap_table"] = ap;
    const auto mean = mean_average_precision(report);
    j["mean_ap"] = mean ? nlohmann::ordered_json(*mean) : nlohmann::ordered_json(nullptr);
  }
  if (sweep) j["sweep"] = sweep_json(*sweep);
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
  std::ostringstream out;
  out << "averaging " << averaging_name(report.averaging) << ", IoU >= "
      << detail::format_fixed(report.iou_threshold, 2) << ", " << report.images << " images\n";
  const bool with_ap = report.ap_table.has_value();
  out << "class       tp      fp      fn   precision  recall      f1";
  if (with_ap) out << "   AP.50:.95";
  out << "\n";
  const auto row = [&](const std::string& name, const Counts& c, const Scores& s,
                       const std::optional<std::optional<double>>& ap) {
    out << name << std::string(name.size() < 6 ? 6 - name.size() : 0, ' ') << pad(std::to_string(c.tp), 8)
        << pad(std::to_string(c.fp), 8) << pad(std::to_string(c.fn), 8)
        << pad(detail::format_fixed(s.precision, 4), 12) << pad(detail::format_fixed(s.recall, 4), 8)
        << pad(detail::format_fixed(s.f1, 4), 8);
    if (ap) out << pad(*ap ? detail::format_fixed(**ap, 4) : std::string("n/a"), 12);
    out << "\n";
  };
  for (const auto& [label, cr] : report.per_class) {
    std::optional<std::optional<double>> ap;
    if (with_ap) {
      const auto it = report.ap_table->find(label);
      ap = it == report.ap_table->end() ? std::nullopt : it->second;
    }
    row(label.code(), cr.counts, cr.scores, ap);
  }
  std::optional<std::optional<double>> mean_ap;
  if (with_ap) mean_ap = mean_average_precision(report);
  row("all", report.counts, report.scores, mean_ap);
  return out.str();
}

std::string report_to_svg(const EvalReport& report) {
  constexpr int kBarWidth = 28, kGap = 24, kPlotHeight = 200, kTop = 40, kLeft = 50;
  const bool with_ap = report.ap_table.has_value();
  const int bars = with_ap ? 2 : 1;
  const int group = bars * kBarWidth + kGap;
  const int width = kLeft + static_cast<int>(report.per_class.size() + 1) * group + 20;
  const int height = kTop + kPlotHeight + 60;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"13\">per-class F1"
      << (with_ap ? " and AP(.50:.95)" : "") << " at IoU "
      << detail::format_fixed(report.iou_threshold, 2) << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const int y = kTop + kPlotHeight - tick * kPlotHeight / 4;
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << width - 10 << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
        << detail::format_fixed(tick * 0.25, 2) << "</text>\n";
  }
  int x = kLeft + kGap / 2;
  const auto bar = [&](double value, const char* colour) {
    const int h = static_cast<int>(value * kPlotHeight + 0.5);
    svg << "<rect x=\"" << x << "\" y=\"" << kTop + kPlotHeight - h << "\" width=\"" << kBarWidth
        << "\" height=\"" << h << "\" fill=\"" << colour << "\"/>\n";
    x += kBarWidth;
  };
  const auto label_at = [&](const std::string& text) {
    svg << "<text x=\"" << x - bars * kBarWidth / 2 << "\" y=\"" << kTop + kPlotHeight + 16
        << "\" text-anchor=\"middle\">" << detail::xml_escape(text) << "</text>\n";
  };
  for (const auto& [label, cr] : report.per_class) {
    bar(cr.scores.f1, "#4c72b0");
    if (with_ap) {
      const auto it = report.ap_table->find(label);
      bar(it != report.ap_table->end() && it->second ? *it->second : 0.0, "#dd8452");
    }
    label_at(label.code());
    x += kGap;
  }
  bar(report.scores.f1, "#4c72b0");
  if (with_ap) x += kBarWidth;
  label_at("all");
  const int legend_y = kTop + kPlotHeight + 40;
  svg << "<rect x=\"" << kLeft << "\" y=\"" << legend_y - 9
      << "\" width=\"10\" height=\"10\" fill=\"#4c72b0\"/><text x=\"" << kLeft + 14 << "\" y=\""
      << legend_y << "\">F1</text>\n";
  if (with_ap) {
    svg << "<rect x=\"" << kLeft + 50 << "\" y=\"" << legend_y - 9
        << "\" width=\"10\" height=\"10\" fill=\"#dd8452\"/><text x=\"" << kLeft + 64
        << "\" y=\"" << legend_y << "\">AP(.50:.95)</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string sweep_to_json(const SweepResult& sweep) { return sweep_json(sweep).dump(2) + "\n"; }

namespace {

std::set<DamageClass> labels_in(const ClassHistogram& hist) {
  std::set<DamageClass> labels(default_whitelist().begin(), default_whitelist().end());
  for (const auto& [country, row] : hist.cells()) {
    for (const auto& [label, n] : row) labels.insert(label);
  }
  return labels;
}

}  // namespace

std::string histogram_to_json(const ClassHistogram& hist, const DatasetIndex& index) {
  const auto labels = labels_in(hist);
  nlohmann::ordered_json j;
  j["images"] = index.size();
  nlohmann::ordered_json countries = nlohmann::ordered_json::object();
  for (const Country c : {Country::CZ, Country::IN, Country::JP}) {
    nlohmann::ordered_json entry;
    const auto it = index.counts().find(c);
    entry["images"] = it == index.counts().end() ? 0 : it->second;
    nlohmann::ordered_json classes = nlohmann::ordered_json::object();
    for (const auto& label : labels) classes[label.code()] = hist.count(c, label);
    entry["annotations"] = classes;
    countries[std::string(country_code(c))] = entry;
  }
  j["countries"] = countries;
  nlohmann::ordered_json totals = nlohmann::ordered_json::object();
  for (const auto& label : labels) totals[label.code()] = hist.count(label);
  j["annotations"] = totals;
  j["total_annotations"] = hist.total();
  return j.dump(2) + "\n";
}

std::string histogram_to_table(const ClassHistogram& hist, const DatasetIndex& index) {
  const auto labels = labels_in(hist);
  std::ostringstream out;
  out << "country  images";
  for (const auto& label : labels) out << pad(label.code(), 8);
  out << "\n";
  std::size_t images = 0;
  for (const Country c : {Country::CZ, Country::IN, Country::JP}) {
    const auto it = index.counts().find(c);
    const std::size_t n = it == index.counts().end() ? 0 : it->second;
    images += n;
    out << country_code(c) << "     " << pad(std::to_string(n), 8);
    for (const auto& label : labels) out << pad(std::to_string(hist.count(c, label)), 8);
    out << "\n";
  }
  out << "all    " << pad(std::to_string(images), 8);
  for (const auto& label : labels) out << pad(std::to_string(hist.count(label)), 8);
  out << "\n";
  return out.str();
}

}  // namespace rdd
