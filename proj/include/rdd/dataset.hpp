#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdd/annotations.hpp"

namespace rdd {

/// Image records keyed by image id, sorted lexicographically.
class DatasetIndex {
 public:
  DatasetIndex() = default;
  /// Throws InvariantError on duplicate image ids.
  explicit DatasetIndex(std::vector<ImageRecord> records);

  const std::vector<ImageRecord>& records() const noexcept { return records_; }
  const std::map<Country, std::size_t>& counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// nullptr when absent.
  const ImageRecord* find(std::string_view image_id) const;
  /// Throws LookupError when absent.
  const ImageRecord& at(std::string_view image_id) const;

  /// Records for `ids`, in the order given.
  std::vector<ImageRecord> select(const std::vector<std::string>& ids) const;

 private:
  std::vector<ImageRecord> records_;
  std::map<Country, std::size_t> counts_;
};

struct ScanSkip {
  std::string path;
  std::string reason;
};

struct ScanResult {
  DatasetIndex index;
  std::size_t files_seen = 0;
  std::vector<ScanSkip> skipped;
};

/// Parses every *.xml below `root`. Files that cannot be read or parsed are
/// reported in `skipped`. Throws EmptyDatasetError when nothing was indexed.
/// Output does not depend on `jobs` or on directory enumeration order.
ScanResult scan_dataset(const std::filesystem::path& root, unsigned jobs = 1);

struct SplitSpec {
  std::array<double, 3> ratios{0.80, 0.15, 0.05};
  std::uint64_t seed = 0;

  /// Throws ContractError unless ratios are non-negative and sum to 1 within 1e-9.
  void validate() const;
};

enum class Partition { Train, Val, Test };

std::string_view partition_name(Partition p) noexcept;
std::optional<Partition> parse_partition(std::string_view name) noexcept;

struct SplitAssignment {
  std::vector<std::string> train, val, test;
  SplitSpec spec;
  /// Countries whose bins came out empty for a positive ratio.
  std::vector<std::string> warnings;

  const std::vector<std::string>& part(Partition p) const;

  friend bool operator==(const SplitAssignment& a, const SplitAssignment& b) {
    return a.train == b.train && a.val == b.val && a.test == b.test &&
           a.spec.ratios == b.spec.ratios && a.spec.seed == b.spec.seed;
  }
};

/// Largest-remainder apportionment of `n` items over `ratios`. Ties in the
/// fractional part go to the earlier bin.
std::array<std::size_t, 3> largest_remainder_sizes(std::size_t n,
                                                   const std::array<double, 3>& ratios);

/// Per-country seeded shuffle followed by largest-remainder partitioning.
/// Each output list is sorted lexicographically.
SplitAssignment stratified_split(const DatasetIndex& index, const SplitSpec& spec);

/// Concatenation of the named partitions in train, val, test order.
std::vector<std::string> compose(const SplitAssignment& assignment,
                                 const std::set<Partition>& parts);

/// Annotation tally per (country, label code).
class ClassHistogram {
 public:
  void add(Country country, const DamageClass& label, std::size_t n = 1);

  std::size_t count(Country country, const DamageClass& label) const;
  std::size_t count(const DamageClass& label) const;
  std::size_t total() const;
  const std::map<Country, std::map<DamageClass, std::size_t>>& cells() const noexcept {
    return cells_;
  }

  ClassHistogram& operator+=(const ClassHistogram& other);
  friend ClassHistogram operator+(ClassHistogram a, const ClassHistogram& b) { return a += b; }
  friend bool operator==(const ClassHistogram&, const ClassHistogram&) = default;

 private:
  std::map<Country, std::map<DamageClass, std::size_t>> cells_;
};

/// Throws LookupError naming the first id in `subset` missing from `index`.
ClassHistogram class_histogram(const DatasetIndex& index, const std::vector<std::string>& subset);

/// JSON split file: {"ratios":[..],"seed":n,"train":[..],"val":[..],"test":[..]}.
std::string split_to_json(const SplitAssignment& assignment);
SplitAssignment split_from_json(std::string_view text);
void write_split_file(const SplitAssignment& assignment, const std::filesystem::path& path);
SplitAssignment read_split_file(const std::filesystem::path& path);

}  // namespace rdd
