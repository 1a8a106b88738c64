#include "rdd/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>

#include "json.hpp"

#include "fileio.hpp"
#include "rdd/errors.hpp"
#include "rdd/random.hpp"

namespace rdd {

namespace fs = std::filesystem;

DatasetIndex::DatasetIndex(std::vector<ImageRecord> records) : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].image_id == records_[i - 1].image_id) {
      throw InvariantError("duplicate image id " + records_[i].image_id);
    }
  }
  for (const auto& r : records_) ++counts_[r.country];
}

const ImageRecord* DatasetIndex::find(std::string_view image_id) const {
  const auto it = std::lower_bound(
      records_.begin(), records_.end(), image_id,
      [](const ImageRecord& r, std::string_view id) { return r.image_id < id; });
  if (it == records_.end() || it->image_id != image_id) return nullptr;
  return &*it;
}

const ImageRecord& DatasetIndex::at(std::string_view image_id) const {
  const auto* r = find(image_id);
  if (r == nullptr) throw LookupError("unknown image id " + std::string(image_id));
  return *r;
}

std::vector<ImageRecord> DatasetIndex::select(const std::vector<std::string>& ids) const {
  std::vector<ImageRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(at(id));
  return out;
}

namespace {

std::optional<Country> country_from_path(const fs::path& path) {
  if (const auto c = country_from_filename(path.filename().string())) return c;
  for (const auto& part : path.parent_path()) {
    if (const auto c = country_from_directory(part.string())) return c;
  }
  return std::nullopt;
}

struct ParsedFile {
  std::optional<ImageRecord> record;
  std::string reason;
};

ParsedFile parse_file(const fs::path& path) {
  try {
    const std::string text = detail::read_file(path);
    return {parse_voc_annotation(text, std::nullopt, country_from_path(path)), {}};
  } catch (const Error& e) {
    return {std::nullopt, e.category() + ": " + e.what()};
  } catch (const std::exception& e) {
    return {std::nullopt, e.what()};
  }
}

}  // namespace

ScanResult scan_dataset(const fs::path& root, unsigned jobs) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root.string() + " is not a directory");

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_regular_file(ec) && it->path().extension() == ".xml") files.push_back(it->path());
  }
  if (ec) throw IoError("cannot enumerate " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  if (files.empty()) throw EmptyDatasetError("no annotation files under " + root.string());

  std::vector<ParsedFile> parsed(files.size());
  const unsigned workers = std::clamp<unsigned>(jobs, 1, 64);
  if (workers == 1) {
    for (std::size_t i = 0; i < files.size(); ++i) parsed[i] = parse_file(files[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < files.size(); i = next++) parsed[i] = parse_file(files[i]);
      });
    }
  }

  ScanResult result;
  result.files_seen = files.size();
  std::vector<ImageRecord> records;
  std::map<std::string, fs::path> seen;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& p = parsed[i];
    if (!p.record) {
      result.skipped.push_back({files[i].string(), p.reason});
      continue;
    }
    const auto [it, inserted] = seen.emplace(p.record->image_id, files[i]);
    if (!inserted) {
      result.skipped.push_back(
          {files[i].string(), "duplicate image id " + p.record->image_id + " (first seen in " +
                                  it->second.string() + ")"});
      continue;
    }
    records.push_back(std::move(*p.record));
  }
  if (records.empty()) {
    throw EmptyDatasetError("none of the " + std::to_string(files.size()) +
                            " annotation files under " + root.string() + " could be parsed");
  }
  result.index = DatasetIndex(std::move(records));
  return result;
}

void SplitSpec::validate() const {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ContractError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractError("split ratios must sum to 1");
}

std::string_view partition_name(Partition p) noexcept {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
  }
  return "?";
}

std::optional<Partition> parse_partition(std::string_view name) noexcept {
  if (name == "train") return Partition::Train;
  if (name == "val") return Partition::Val;
  if (name == "test") return Partition::Test;
  return std::nullopt;
}

const std::vector<std::string>& SplitAssignment::part(Partition p) const {
  switch (p) {
    case Partition::Train: return train;
    case Partition::Val: return val;
    case Partition::Test: return test;
  }
  return train;
}

namespace {
constexpr double kQuotaTolerance = 1e-9;
}  // namespace

std::array<std::size_t, 3> largest_remainder_sizes(std::size_t n,
                                                   const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    double quota = static_cast<double>(n) * ratios[i];
    // Snap quotas that are integral up to rounding (0.7 * 10 is 6.999...).
    if (std::abs(quota - std::round(quota)) <= kQuotaTolerance * std::max(1.0, quota)) {
      quota = std::round(quota);
    }
    const double whole = std::floor(quota);
    sizes[i] = static_cast<std::size_t>(whole);
    remainder[i] = quota - whole;
    assigned += sizes[i];
  }
  // Ratios summing to 1 within 1e-9 can push the floors one past n.
  while (assigned > n) {
    const auto i = static_cast<std::size_t>(
        std::distance(remainder.begin(), std::min_element(remainder.begin(), remainder.end())));
    if (sizes[i] == 0) break;
    --sizes[i];
    remainder[i] += 1.0;
    --assigned;
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return remainder[a] > remainder[b] + kQuotaTolerance;
                   });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    if (ratios[order[k]] <= 0.0) continue;
    ++sizes[order[k]];
    ++assigned;
  }
  return sizes;
}

SplitAssignment stratified_split(const DatasetIndex& index, const SplitSpec& spec) {
  spec.validate();
  if (index.empty()) throw ContractError("stratified_split: index is empty");

  std::map<Country, std::vector<std::string>> by_country;
  for (const auto& r : index.records()) by_country[r.country].push_back(r.image_id);

  SplitAssignment out;
  out.spec = spec;
  for (auto& [country, ids] : by_country) {
    std::sort(ids.begin(), ids.end());
    StableRng rng(derive_seed(spec.seed, country_code(country)));
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[rng.below(i)]);
    }
    const auto sizes = largest_remainder_sizes(ids.size(), spec.ratios);
    auto cursor = ids.begin();
    std::array<std::vector<std::string>*, 3> bins{&out.train, &out.val, &out.test};
    for (std::size_t b = 0; b < 3; ++b) {
      bins[b]->insert(bins[b]->end(), cursor, cursor + static_cast<std::ptrdiff_t>(sizes[b]));
      cursor += static_cast<std::ptrdiff_t>(sizes[b]);
      if (sizes[b] == 0 && spec.ratios[b] > 0.0) {
        out.warnings.push_back(std::string(country_code(country)) + ": " +
                               std::to_string(ids.size()) + " images leave the " +
                               std::string(partition_name(static_cast<Partition>(b))) +
                               " split empty");
      }
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::string> compose(const SplitAssignment& assignment,
                                 const std::set<Partition>& parts) {
  if (parts.empty()) throw ContractError("compose: no partitions named");
  std::vector<std::string> ids;
  std::set<std::string_view> seen;
  for (const Partition p : {Partition::Train, Partition::Val, Partition::Test}) {
    if (!parts.contains(p)) continue;
    for (const auto& id : assignment.part(p)) {
      if (seen.insert(id).second) ids.push_back(id);
    }
  }
  return ids;
}

void ClassHistogram::add(Country country, const DamageClass& label, std::size_t n) {
  cells_[country][label] += n;
}

std::size_t ClassHistogram::count(Country country, const DamageClass& label) const {
  const auto c = cells_.find(country);
  if (c == cells_.end()) return 0;
  const auto l = c->second.find(label);
  return l == c->second.end() ? 0 : l->second;
}

std::size_t ClassHistogram::count(const DamageClass& label) const {
  std::size_t n = 0;
  for (const auto& [country, row] : cells_) {
    if (const auto it = row.find(label); it != row.end()) n += it->second;
  }
  return n;
}

std::size_t ClassHistogram::total() const {
  std::size_t n = 0;
  for (const auto& [country, row] : cells_) {
    for (const auto& [label, k] : row) n += k;
  }
  return n;
}

ClassHistogram& ClassHistogram::operator+=(const ClassHistogram& other) {
  for (const auto& [country, row] : other.cells_) {
    for (const auto& [label, k] : row) add(country, label, k);
  }
  return *this;
}

ClassHistogram class_histogram(const DatasetIndex& index, const std::vector<std::string>& subset) {
  ClassHistogram hist;
  for (const auto& id : subset) {
    const auto& record = index.at(id);
    for (const auto& a : record.ground_truth) hist.add(record.country, a.label);
  }
  return hist;
}

std::string split_to_json(const SplitAssignment& assignment) {
  nlohmann::ordered_json j;
  j["ratios"] = assignment.spec.ratios;
  j["seed"] = assignment.spec.seed;
  for (const Partition p : {Partition::Train, Partition::Val, Partition::Test}) {
    auto ids = assignment.part(p);
    std::sort(ids.begin(), ids.end());
    j[std::string(partition_name(p))] = ids;
  }
  return j.dump(2) + "\n";
}

SplitAssignment split_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("split file: ") + e.what());
  }
  try {
    SplitAssignment out;
    const auto ratios = j.at("ratios").get<std::vector<double>>();
    if (ratios.size() != 3) throw SchemaError("split file: 'ratios' must have three entries");
    std::copy(ratios.begin(), ratios.end(), out.spec.ratios.begin());
    out.spec.seed = j.at("seed").get<std::uint64_t>();
    out.train = j.at("train").get<std::vector<std::string>>();
    out.val = j.at("val").get<std::vector<std::string>>();
    out.test = j.at("test").get<std::vector<std::string>>();
    out.spec.validate();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("split file: ") + e.what());
  }
}

void write_split_file(const SplitAssignment& assignment, const fs::path& path) {
  detail::write_file(path, split_to_json(assignment));
}

SplitAssignment read_split_file(const fs::path& path) {
  return split_from_json(detail::read_file(path));
}

}  // namespace rdd
