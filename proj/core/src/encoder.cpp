#include "emokd/encoder.hpp"

#include <cstdlib>
#include <map>

#include "httplib.h"
#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"

namespace emokd {

using nlohmann::json;

RemoteEncoderClient::RemoteEncoderClient(std::string endpoint,
                                         std::string token_env_var)
    : endpoint_(std::move(endpoint)), token_env_var_(std::move(token_env_var)) {}

std::vector<std::vector<double>> RemoteEncoderClient::encode(
    const std::string& image_path) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) {
    throw ExtractionError("bad endpoint '" + endpoint_ + "'");
  }
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  const std::string host_port =
      path_start == std::string::npos ? endpoint_ : endpoint_.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  httplib::Client client(host_port);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!token_env_var_.empty()) {
    if (const char* token = std::getenv(token_env_var_.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  const json body = {{"image_path", image_path}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw ExtractionError(
        "encode request failed for " + image_path + " (" +
        (res ? "status " + std::to_string(res->status) : "no response") + ")");
  }
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception& e) {
    throw ExtractionError("bad encode response for " + image_path + ": " +
                          e.what());
  }
  if (!parsed.contains("tokens")) {
    throw ExtractionError("encode response for " + image_path +
                          " has no tokens");
  }
  return parsed["tokens"].get<std::vector<std::vector<double>>>();
}

std::vector<double> mean_pool(const std::vector<std::vector<double>>& tokens) {
  if (tokens.empty()) throw ExtractionError("no tokens to pool");
  const std::size_t dim = tokens.front().size();
  if (dim == 0) throw ExtractionError("zero-dimensional token");
  std::vector<double> pooled(dim, 0.0);
  for (const auto& token : tokens) {
    if (token.size() != dim) {
      throw ExtractionError("ragged token sequence");
    }
    for (std::size_t d = 0; d < dim; ++d) pooled[d] += token[d];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& v : pooled) v *= inv;
  return pooled;
}

std::vector<FeatureRecord> extract_features(
    const std::vector<std::string>& image_paths, EncoderClient& client,
    const LabelSpacePtr& space,
    const std::optional<std::filesystem::path>& cache_path) {
  std::map<std::string, std::vector<double>> cached;
  std::size_t dim = 0;
  if (cache_path && std::filesystem::exists(*cache_path)) {
    FeatureFile existing = load_feature_file(*cache_path);
    dim = existing.dim;
    for (FeatureRecord& r : existing.records) {
      cached.emplace(r.sample_id, std::move(r.vector));
    }
  }

  std::vector<FeatureRecord> out;
  out.reserve(image_paths.size());
  std::vector<std::string> failures;
  for (const std::string& path : image_paths) {
    auto hit = cached.find(path);
    if (hit != cached.end()) {
      out.push_back({path, hit->second});
      continue;
    }
    try {
      std::vector<double> pooled = mean_pool(client.encode(path));
      if (dim == 0) dim = pooled.size();
      if (pooled.size() != dim) {
        throw ExtractionError("dimension changed mid-extraction for " + path);
      }
      cached.emplace(path, pooled);
      out.push_back({path, std::move(pooled)});
    } catch (const Error& e) {
      failures.push_back(path + ": " + e.what());
    }
  }

  if (cache_path && dim > 0) {
    FeatureFile file;
    file.space = space;
    file.dim = dim;
    file.records.reserve(cached.size());
    for (auto& [id, vec] : cached) file.records.push_back({id, vec});
    save_feature_file(*cache_path, file);
  }

  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " extraction failure(s):";
    for (const std::string& f : failures) {
      msg += "\n  ";
      msg += f;
    }
    throw ExtractionError(msg);
  }
  return out;
}

}  // namespace emokd
