#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "emokd/dataset.hpp"
#include "emokd/label_space.hpp"

namespace emokd {

enum class TripletKind { categorical, conversation, reasoning };

std::string to_string(TripletKind kind);
TripletKind triplet_kind_from_string(const std::string& s);

struct InstructionTriplet {
  std::string image_ref;
  TripletKind kind = TripletKind::categorical;
  std::string question;
  std::string response;

  bool operator==(const InstructionTriplet&) const = default;
};

// The fixed prompt asking for one label out of the space, e.g. for an
// 8-class space: "... from the following 8 categories: a, b, ..., and h.
// Answer in dictionary form as follows: {'emotion':'<first label>'}".
std::string render_categorical_question(const LabelSpace& space);

std::string render_conversation_question();
std::string render_reasoning_question();

std::string categorical_response(const std::string& label);

InstructionTriplet build_categorical_triplet(const SampleEntry& sample,
                                             const LabelSpacePtr& space);

// External text generator (the descriptive-response source). Implementations
// throw GenerationError on failure.
class TextGenerationClient {
 public:
  virtual ~TextGenerationClient() = default;
  virtual std::string generate(const std::string& sample_id, TripletKind kind,
                               const std::string& prompt,
                               const std::string& image_ref) = 0;
};

// Deterministic client replaying responses keyed by (sample_id, kind) from
// a line-delimited file of {sample_id, kind, text} records.
class ReplayTextClient : public TextGenerationClient {
 public:
  explicit ReplayTextClient(const std::filesystem::path& replay_file);
  std::string generate(const std::string& sample_id, TripletKind kind,
                       const std::string& prompt,
                       const std::string& image_ref) override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> responses_;
};

// POST-style client: one JSON request {sample_id, kind, prompt, image_ref,
// decoding?} per call, response {"text": ...} or plain text. The bearer
// token, if any, comes from an environment variable, never from config.
class RemoteTextClient : public TextGenerationClient {
 public:
  RemoteTextClient(std::string endpoint, std::string token_env_var,
                   std::string decoding_params_json = "");
  std::string generate(const std::string& sample_id, TripletKind kind,
                       const std::string& prompt,
                       const std::string& image_ref) override;

 private:
  std::string endpoint_;
  std::string token_env_var_;
  std::string decoding_params_json_;
};

std::vector<InstructionTriplet> generate_descriptive_triplets(
    const SampleEntry& sample, const std::vector<TripletKind>& kinds,
    TextGenerationClient& client);

// Line-delimited UTF-8 records {image_ref, kind, question, response}.
void write_triplets(const std::filesystem::path& path,
                    const std::vector<InstructionTriplet>& triplets);
std::vector<InstructionTriplet> read_triplets(const std::filesystem::path& path);

}  // namespace emokd
