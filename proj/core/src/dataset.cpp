#include "emokd/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "emokd/errors.hpp"
#include "emokd/rng.hpp"
#include "emokd/util.hpp"

namespace emokd {

namespace {

bool is_image_file(const std::filesystem::path& p) {
  static const std::vector<std::string> exts = {
      ".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp", ".tif", ".tiff"};
  const std::string ext = to_lower(p.extension().string());
  return std::find(exts.begin(), exts.end(), ext) != exts.end();
}

}  // namespace

DatasetProfile dataset_profile(const std::string& name) {
  if (name == "emoset") return {name, mikels8(), 118102};
  if (name == "fi") return {name, mikels8(), 21824};
  if (name == "emotion6") return {name, ekman6(), 1980};
  if (name == "flickr") return {name, binary_space(), 60738};
  if (name == "instagram") return {name, binary_space(), 42832};
  throw ConfigError("unknown dataset profile '" + name + "'");
}

const std::vector<std::string>& dataset_profile_names() {
  static const std::vector<std::string> names = {"emoset", "fi", "emotion6",
                                                 "flickr", "instagram"};
  return names;
}

void SplitSpec::validate() const {
  if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0)) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

SampleIndex scan_dataset(const std::filesystem::path& root_dir,
                         const DatasetProfile& profile) {
  SampleIndex index;
  index.profile = profile;
  for (const std::string& label : profile.space->labels) {
    const std::filesystem::path dir = root_dir / label;
    if (!std::filesystem::is_directory(dir)) {
      throw LayoutError("missing label directory " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (!is_image_file(entry.path())) continue;
      SampleEntry sample;
      sample.sample_id = label + "/" + entry.path().filename().string();
      sample.image_path = entry.path().string();
      sample.label = label;
      index.entries.push_back(std::move(sample));
    }
  }
  if (index.entries.empty()) {
    throw EmptyDataset("no images under " + root_dir.string());
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const SampleEntry& a, const SampleEntry& b) {
              return a.sample_id < b.sample_id;
            });
  return index;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n == 0) throw EmptyDataset("cannot split an empty index");
  const auto n_train =
      static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n)));
  const auto n_val =
      static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n)));
  if (n_train + n_val > n) throw SplitTooSmall("split fractions overflow n");
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    throw SplitTooSmall("a split is empty for n=" + std::to_string(n));
  }
  return {n_train, n_val, n_test};
}

std::array<std::vector<std::size_t>, 3> split_positions(std::size_t n,
                                                        const SplitSpec& spec) {
  const auto sizes = split_sizes(n, spec);
  const std::vector<std::size_t> perm = random_permutation(n, spec.seed);
  std::array<std::vector<std::size_t>, 3> parts;
  std::size_t cursor = 0;
  for (std::size_t part = 0; part < 3; ++part) {
    parts[part].assign(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                       perm.begin() + static_cast<std::ptrdiff_t>(cursor + sizes[part]));
    std::sort(parts[part].begin(), parts[part].end());
    cursor += sizes[part];
  }
  return parts;
}

SplitIndexes split_index(const SampleIndex& index, const SplitSpec& spec) {
  const auto parts = split_positions(index.size(), spec);
  SplitIndexes out;
  SampleIndex* targets[3] = {&out.train, &out.val, &out.test};
  for (std::size_t part = 0; part < 3; ++part) {
    targets[part]->profile = index.profile;
    targets[part]->entries.reserve(parts[part].size());
    for (std::size_t pos : parts[part]) {
      targets[part]->entries.push_back(index.entries[pos]);
    }
  }
  return out;
}

}  // namespace emokd
