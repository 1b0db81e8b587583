#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emokd/label_space.hpp"

namespace emokd {

// Frozen-encoder output for one sample.
struct FeatureRecord {
  std::string sample_id;
  std::vector<double> vector;
};

// Teacher logits for one sample (pre-softening).
struct TeacherRecord {
  std::string sample_id;
  std::vector<double> logits;
};

// VLM categorical answer; parsed is empty when raw_text yields no known
// label under the parsing rules.
struct VlmPrediction {
  std::string sample_id;
  std::string raw_text;
  std::optional<OneHotVector> parsed;
};

// Extraction order: (1) dictionary form {'emotion': '<x>'} with flexible
// quoting and whitespace; (2) first whole-word occurrence of any space
// label in the lowercased text. Throws OutOfVocabulary when a dictionary
// answer names an unknown label, UnparseableResponse when nothing matches.
std::string parse_vlm_response(const std::string& text,
                               const LabelSpacePtr& space);

// Non-throwing variant used when assembling gate inputs: parse failures
// come back as an empty optional instead.
std::optional<OneHotVector> try_parse_vlm_response(const std::string& text,
                                                   const LabelSpacePtr& space);

struct FeatureFile {
  LabelSpacePtr space;
  std::size_t dim = 0;
  std::vector<FeatureRecord> records;
};

struct TeacherFile {
  LabelSpacePtr space;
  std::vector<TeacherRecord> records;
};

struct VlmFile {
  LabelSpacePtr space;
  std::vector<VlmPrediction> records;
};

struct LabelFile {
  LabelSpacePtr space;
  std::vector<std::pair<std::string, std::string>> records;  // id -> label
};

// All four files share one envelope: a JSON header line carrying the kind,
// the label space and the record count, then one record per line. Numeric
// rows are "<sample_id>\t<v0> <v1> ..." with round-trip-exact doubles.
void save_feature_file(const std::filesystem::path& path, const FeatureFile& f);
FeatureFile load_feature_file(const std::filesystem::path& path);

void save_teacher_file(const std::filesystem::path& path, const TeacherFile& f);
TeacherFile load_teacher_file(const std::filesystem::path& path);

void save_vlm_file(const std::filesystem::path& path, const VlmFile& f);
VlmFile load_vlm_file(const std::filesystem::path& path);

void save_label_file(const std::filesystem::path& path, const LabelFile& f);
LabelFile load_label_file(const std::filesystem::path& path);

}  // namespace emokd
