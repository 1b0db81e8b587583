#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emokd/label_space.hpp"

namespace emokd {

// One of the five benchmark layouts. The name fixes the label space:
// emoset/fi -> mikels8, emotion6 -> ekman6, flickr/instagram -> binary.
struct DatasetProfile {
  std::string name;
  LabelSpacePtr space;
  std::size_t expected_size = 0;  // documentation only
};

DatasetProfile dataset_profile(const std::string& name);
const std::vector<std::string>& dataset_profile_names();

struct SampleEntry {
  std::string sample_id;
  std::string image_path;
  std::string label;
};

struct SampleIndex {
  std::vector<SampleEntry> entries;
  DatasetProfile profile;

  std::size_t size() const { return entries.size(); }
};

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  uint64_t seed = 0;

  void validate() const;  // fractions positive, summing to 1 within 1e-9
};

// Walks <root>/<label>/* for every label in the profile's space, keeping
// only image files. Entries come back sorted by sample_id
// ("<label>/<filename>").
SampleIndex scan_dataset(const std::filesystem::path& root_dir,
                         const DatasetProfile& profile);

struct SplitIndexes {
  SampleIndex train;
  SampleIndex val;
  SampleIndex test;
};

SplitIndexes split_index(const SampleIndex& index, const SplitSpec& spec);

// Shared split arithmetic: floor(train*n), floor(val*n), remainder.
// Throws SplitTooSmall if any part rounds to zero.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

// Seed-keyed disjoint index partition of [0, n) in split order.
std::array<std::vector<std::size_t>, 3> split_positions(std::size_t n,
                                                        const SplitSpec& spec);

}  // namespace emokd
