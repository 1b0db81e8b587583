#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emokd/records.hpp"

namespace emokd {

// Source of frozen visual-encoder token sequences for an image.
class EncoderClient {
 public:
  virtual ~EncoderClient() = default;
  // One vector per token; all tokens share a dimension. Throws
  // ExtractionError on failure.
  virtual std::vector<std::vector<double>> encode(const std::string& image_path) = 0;
};

// POST-style client: request {"image_path": ...}, response
// {"tokens": [[...], ...]}.
class RemoteEncoderClient : public EncoderClient {
 public:
  RemoteEncoderClient(std::string endpoint, std::string token_env_var);
  std::vector<std::vector<double>> encode(const std::string& image_path) override;

 private:
  std::string endpoint_;
  std::string token_env_var_;
};

// Token sequences are reduced to one vector by mean pooling.
std::vector<double> mean_pool(const std::vector<std::vector<double>>& tokens);

// Extracts one pooled feature vector per image (sample_id = path). When a
// cache file is given, already-extracted ids are reused and the cache is
// rewritten with the union. Per-sample failures are collected and reported
// in one ExtractionError after all paths were attempted.
std::vector<FeatureRecord> extract_features(
    const std::vector<std::string>& image_paths, EncoderClient& client,
    const LabelSpacePtr& space,
    const std::optional<std::filesystem::path>& cache_path = std::nullopt);

}  // namespace emokd
