#include "emokd/instructions.hpp"

#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

std::string to_string(TripletKind kind) {
  switch (kind) {
    case TripletKind::categorical: return "categorical";
    case TripletKind::conversation: return "conversation";
    case TripletKind::reasoning: return "reasoning";
  }
  throw InvalidInput("bad triplet kind");
}

TripletKind triplet_kind_from_string(const std::string& s) {
  if (s == "categorical") return TripletKind::categorical;
  if (s == "conversation") return TripletKind::conversation;
  if (s == "reasoning") return TripletKind::reasoning;
  throw InvalidInput("unknown triplet kind '" + s + "'");
}

std::string render_categorical_question(const LabelSpace& space) {
  std::ostringstream out;
  out << "Observe the image and select the emotion category that best "
         "matches this image from the following "
      << space.size() << " categories: ";
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (i > 0) out << ", ";
    if (i + 1 == space.size()) out << "and ";
    out << space.labels[i];
  }
  out << ". Answer in dictionary form as follows: {'emotion':'"
      << space.labels.front() << "'}";
  return out.str();
}

std::string render_conversation_question() {
  return "Observe the image and describe key elements of the image.";
}

std::string render_reasoning_question() {
  return "Observe the image and describe the process of inferring the "
         "emotions conveyed in the image.";
}

std::string categorical_response(const std::string& label) {
  return "{'emotion': '" + label + "'}";
}

InstructionTriplet build_categorical_triplet(const SampleEntry& sample,
                                             const LabelSpacePtr& space) {
  if (!space->index_of(sample.label)) {
    throw OutOfVocabulary("label '" + sample.label + "' not in space '" +
                          space->name + "'");
  }
  InstructionTriplet triplet;
  triplet.image_ref = sample.image_path.empty() ? sample.sample_id
                                                : sample.image_path;
  triplet.kind = TripletKind::categorical;
  triplet.question = render_categorical_question(*space);
  triplet.response = categorical_response(sample.label);
  return triplet;
}

ReplayTextClient::ReplayTextClient(const std::filesystem::path& replay_file) {
  const auto lines = read_lines(replay_file);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json record;
    try {
      record = json::parse(lines[i]);
    } catch (const json::exception& e) {
      throw ParseError("bad replay record: " + std::string(e.what()), i + 1);
    }
    if (!record.contains("sample_id") || !record.contains("kind") ||
        !record.contains("text")) {
      throw ParseError("replay record needs sample_id, kind, text", i + 1);
    }
    responses_[{record["sample_id"].get<std::string>(),
                record["kind"].get<std::string>()}] =
        record["text"].get<std::string>();
  }
}

std::string ReplayTextClient::generate(const std::string& sample_id,
                                       TripletKind kind,
                                       const std::string& /*prompt*/,
                                       const std::string& /*image_ref*/) {
  auto it = responses_.find({sample_id, to_string(kind)});
  if (it == responses_.end()) {
    throw GenerationError("no replay response for kind " + to_string(kind),
                          sample_id);
  }
  return it->second;
}

RemoteTextClient::RemoteTextClient(std::string endpoint,
                                   std::string token_env_var,
                                   std::string decoding_params_json)
    : endpoint_(std::move(endpoint)),
      token_env_var_(std::move(token_env_var)),
      decoding_params_json_(std::move(decoding_params_json)) {}

std::string RemoteTextClient::generate(const std::string& sample_id,
                                       TripletKind kind,
                                       const std::string& prompt,
                                       const std::string& image_ref) {
  // endpoint_ looks like "http://host:port/path"
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) {
    throw GenerationError("bad endpoint '" + endpoint_ + "'", sample_id);
  }
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  const std::string host_port = path_start == std::string::npos
                                    ? endpoint_.substr(0)
                                    : endpoint_.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  httplib::Client client(host_port);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);

  httplib::Headers headers;
  if (!token_env_var_.empty()) {
    if (const char* token = std::getenv(token_env_var_.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  json body = {{"sample_id", sample_id},
               {"kind", to_string(kind)},
               {"prompt", prompt},
               {"image_ref", image_ref}};
  if (!decoding_params_json_.empty()) {
    // forwarded verbatim; no decoding defaults are asserted here
    body["decoding"] = json::parse(decoding_params_json_);
  }

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw GenerationError(
        "generation request failed (" +
            (res ? "status " + std::to_string(res->status) : "no response") +
            ")",
        sample_id);
  }
  // Accept {"text": ...} or a raw text body.
  try {
    json parsed = json::parse(res->body);
    if (parsed.is_object() && parsed.contains("text")) {
      return parsed["text"].get<std::string>();
    }
  } catch (const json::exception&) {
  }
  return res->body;
}

std::vector<InstructionTriplet> generate_descriptive_triplets(
    const SampleEntry& sample, const std::vector<TripletKind>& kinds,
    TextGenerationClient& client) {
  if (kinds.empty()) throw InvalidInput("no descriptive kinds requested");
  std::vector<InstructionTriplet> out;
  out.reserve(kinds.size());
  for (TripletKind kind : kinds) {
    if (kind == TripletKind::categorical) {
      throw InvalidInput("categorical triplets are not client-generated");
    }
    InstructionTriplet triplet;
    triplet.image_ref = sample.image_path.empty() ? sample.sample_id
                                                  : sample.image_path;
    triplet.kind = kind;
    triplet.question = kind == TripletKind::conversation
                           ? render_conversation_question()
                           : render_reasoning_question();
    const std::string raw =
        client.generate(sample.sample_id, kind, triplet.question,
                        triplet.image_ref);
    triplet.response = trim(raw);
    if (triplet.response.empty()) {
      throw GenerationError("empty generation output", sample.sample_id);
    }
    out.push_back(std::move(triplet));
  }
  return out;
}

void write_triplets(const std::filesystem::path& path,
                    const std::vector<InstructionTriplet>& triplets) {
  std::string content;
  for (const InstructionTriplet& t : triplets) {
    json record = {{"image_ref", t.image_ref},
                   {"kind", to_string(t.kind)},
                   {"question", t.question},
                   {"response", t.response}};
    content += record.dump();
    content += '\n';
  }
  atomic_write_file(path, content);
}

std::vector<InstructionTriplet> read_triplets(
    const std::filesystem::path& path) {
  std::vector<InstructionTriplet> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json record;
    try {
      record = json::parse(lines[i]);
    } catch (const json::exception& e) {
      throw ParseError("bad triplet record: " + std::string(e.what()), i + 1);
    }
    if (!record.contains("image_ref") || !record.contains("kind") ||
        !record.contains("question") || !record.contains("response")) {
      throw ParseError("triplet record missing a field", i + 1);
    }
    InstructionTriplet t;
    t.image_ref = record["image_ref"].get<std::string>();
    t.kind = triplet_kind_from_string(record["kind"].get<std::string>());
    t.question = record["question"].get<std::string>();
    t.response = record["response"].get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace emokd
