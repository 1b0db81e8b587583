#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "emokd/dataset.hpp"
#include "emokd/errors.hpp"

using namespace emokd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("emokd_test_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void touch(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream(p).put('x');
}

fs::path make_mikels_root(const TempDir& tmp, int images_per_label) {
  const fs::path root = tmp.path / "data";
  for (const std::string& label : mikels8()->labels) {
    for (int i = 0; i < images_per_label; ++i) {
      touch(root / label / ("img" + std::to_string(i) + ".jpg"));
    }
  }
  return root;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("profiles pin the name-to-space pairing") {
  CHECK(dataset_profile("emoset").space->name == "mikels8");
  CHECK(dataset_profile("fi").space->name == "mikels8");
  CHECK(dataset_profile("emotion6").space->name == "ekman6");
  CHECK(dataset_profile("flickr").space->name == "binary");
  CHECK(dataset_profile("instagram").space->name == "binary");
  CHECK(dataset_profile("fi").expected_size == 21824);
  CHECK_THROWS_AS(dataset_profile("imagenet"), ConfigError);
}

TEST_CASE("scan_dataset indexes image files per label directory") {
  TempDir tmp;
  const fs::path root = make_mikels_root(tmp, 3);
  const SampleIndex index = scan_dataset(root, dataset_profile("fi"));
  CHECK(index.size() == 24);

  // deterministic sorted order
  for (std::size_t i = 1; i < index.entries.size(); ++i) {
    CHECK(index.entries[i - 1].sample_id < index.entries[i].sample_id);
  }
  for (const SampleEntry& e : index.entries) {
    CHECK(mikels8()->index_of(e.label).has_value());
  }
}

TEST_CASE("scan_dataset skips non-image files without changing the count") {
  TempDir tmp;
  const fs::path root = make_mikels_root(tmp, 3);
  touch(root / "awe" / "notes.txt");
  touch(root / "fear" / "README.md");
  const SampleIndex index = scan_dataset(root, dataset_profile("fi"));
  CHECK(index.size() == 24);
}

TEST_CASE("scan_dataset errors") {
  TempDir tmp;
  const fs::path root = make_mikels_root(tmp, 2);
  fs::remove_all(root / "fear");
  CHECK_THROWS_AS(scan_dataset(root, dataset_profile("fi")), LayoutError);

  TempDir tmp2;
  const fs::path empty_root = tmp2.path / "data";
  for (const std::string& label : mikels8()->labels) {
    fs::create_directories(empty_root / label);
  }
  CHECK_THROWS_AS(scan_dataset(empty_root, dataset_profile("fi")), EmptyDataset);
}

TEST_CASE("split sizes follow the floor rule") {
  SplitSpec spec;
  spec.seed = 7;
  const auto sizes = split_sizes(100, spec);
  CHECK(sizes[0] == 80);
  CHECK(sizes[1] == 10);
  CHECK(sizes[2] == 10);
  CHECK_THROWS_AS(split_sizes(5, spec), SplitTooSmall);

  SplitSpec bad;
  bad.train = 0.9;
  bad.val = 0.2;
  bad.test = 0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SplitSpec{};
  bad.val = -0.1;
  bad.test = 0.3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("split_index partitions the index deterministically") {
  TempDir tmp;
  const fs::path root = make_mikels_root(tmp, 25);  // 200 samples
  const SampleIndex index = scan_dataset(root, dataset_profile("fi"));
  SplitSpec spec;
  spec.seed = 7;

  const SplitIndexes a = split_index(index, spec);
  const SplitIndexes b = split_index(index, spec);
  CHECK(a.train.size() == 160);
  CHECK(a.val.size() == 20);
  CHECK(a.test.size() == 20);

  auto ids = [](const SampleIndex& idx) {
    std::set<std::string> s;
    for (const SampleEntry& e : idx.entries) s.insert(e.sample_id);
    return s;
  };
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.val) == ids(b.val));
  CHECK(ids(a.test) == ids(b.test));

  // partition: disjoint and exhaustive
  std::set<std::string> all = ids(a.train);
  for (const auto& id : ids(a.val)) CHECK(all.insert(id).second);
  for (const auto& id : ids(a.test)) CHECK(all.insert(id).second);
  CHECK(all == ids(index));

  // a different seed moves members
  SplitSpec other = spec;
  other.seed = 8;
  CHECK(ids(split_index(index, other).train) != ids(a.train));
}

TEST_SUITE_END();
