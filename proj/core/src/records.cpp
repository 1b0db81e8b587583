#include "emokd/records.hpp"

#include <cctype>
#include <cmath>
#include <regex>
#include <unordered_set>

#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::optional<std::string> extract_dictionary_label(const std::string& text) {
  static const std::regex dict_re(
      R"(\{\s*['"]emotion['"]\s*:\s*['"]([^'"{}]*)['"]\s*\})");
  std::smatch m;
  if (std::regex_search(text, m, dict_re)) {
    return to_lower(trim(m[1].str()));
  }
  return std::nullopt;
}

// First whole-word occurrence of any space label in the lowercased text;
// ties at the same position break to the lower label index.
std::optional<std::size_t> fallback_label_index(const std::string& text,
                                                const LabelSpace& space) {
  const std::string lower = to_lower(text);
  std::size_t best_pos = std::string::npos;
  std::size_t best_label = 0;
  for (std::size_t li = 0; li < space.labels.size(); ++li) {
    const std::string& label = space.labels[li];
    std::size_t from = 0;
    while (true) {
      const std::size_t pos = lower.find(label, from);
      if (pos == std::string::npos) break;
      const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
      const std::size_t end = pos + label.size();
      const bool right_ok = end >= lower.size() || !is_word_char(lower[end]);
      if (left_ok && right_ok) {
        if (pos < best_pos) {
          best_pos = pos;
          best_label = li;
        }
        break;
      }
      from = pos + 1;
    }
  }
  if (best_pos == std::string::npos) return std::nullopt;
  return best_label;
}

}  // namespace

std::string parse_vlm_response(const std::string& text,
                               const LabelSpacePtr& space) {
  if (auto dict_label = extract_dictionary_label(text)) {
    if (space->index_of(*dict_label)) return *dict_label;
    throw OutOfVocabulary("label '" + *dict_label + "' not in space '" +
                          space->name + "'");
  }
  if (auto idx = fallback_label_index(text, *space)) {
    return space->labels[*idx];
  }
  throw UnparseableResponse("no label of space '" + space->name +
                            "' found in response");
}

std::optional<OneHotVector> try_parse_vlm_response(const std::string& text,
                                                   const LabelSpacePtr& space) {
  try {
    return one_hot(parse_vlm_response(text, space), space);
  } catch (const OutOfVocabulary&) {
    return std::nullopt;
  } catch (const UnparseableResponse&) {
    return std::nullopt;
  }
}

namespace {

json space_to_json(const LabelSpacePtr& space) {
  return json{{"name", space->name}, {"labels", space->labels}};
}

LabelSpacePtr space_from_json(const json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("name") || !j.contains("labels")) {
    throw ParseError("header space needs name and labels", line);
  }
  return LabelSpace::make(j["name"].get<std::string>(),
                          j["labels"].get<std::vector<std::string>>());
}

json parse_header(const std::vector<std::string>& lines,
                  const std::string& expected_kind,
                  const std::filesystem::path& path) {
  if (lines.empty()) {
    throw SchemaError("empty file " + path.string());
  }
  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::exception& e) {
    throw ParseError("bad header: " + std::string(e.what()), 1);
  }
  if (!header.is_object() || header.value("kind", "") != expected_kind) {
    throw SchemaError("file " + path.string() + " is not a " + expected_kind +
                      " file");
  }
  return header;
}

void check_sample_id(const std::string& id) {
  if (id.empty() || id.find('\t') != std::string::npos ||
      id.find('\n') != std::string::npos) {
    throw SchemaError("bad sample_id '" + id + "'");
  }
}

std::string numeric_row(const std::string& id,
                        std::span<const double> values) {
  check_sample_id(id);
  std::string row = id;
  row += '\t';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) row += ' ';
    row += format_double(values[i]);
  }
  return row;
}

std::pair<std::string, std::vector<double>> parse_numeric_row(
    const std::string& line, std::size_t expected_len, std::size_t line_no) {
  const std::size_t tab = line.find('\t');
  if (tab == std::string::npos) {
    throw ParseError("row is missing the id/values tab separator", line_no);
  }
  std::string id = line.substr(0, tab);
  const auto tokens = split_ws(line.substr(tab + 1));
  if (tokens.size() != expected_len) {
    throw SchemaError("row for '" + id + "' has " +
                      std::to_string(tokens.size()) + " values, expected " +
                      std::to_string(expected_len));
  }
  std::vector<double> values;
  values.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    const double v = parse_double(tok, line_no);
    if (!std::isfinite(v)) throw SchemaError("non-finite value in row '" + id + "'");
    values.push_back(v);
  }
  return {std::move(id), std::move(values)};
}

void check_duplicates(const std::vector<std::string>& ids) {
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (!seen.insert(id).second) {
      throw DuplicateSample("duplicate sample_id '" + id + "'");
    }
  }
}

void check_count(const json& header, std::size_t actual,
                 const std::filesystem::path& path) {
  if (!header.contains("count")) return;
  const auto declared = header.at("count").get<std::size_t>();
  if (declared != actual) {
    throw SchemaError(path.string() + " declares " + std::to_string(declared) +
                      " records but has " + std::to_string(actual));
  }
}

}  // namespace

void save_feature_file(const std::filesystem::path& path, const FeatureFile& f) {
  json header = {{"kind", "features"},
                 {"space", space_to_json(f.space)},
                 {"d", f.dim},
                 {"count", f.records.size()}};
  std::string content = header.dump();
  content += '\n';
  for (const FeatureRecord& r : f.records) {
    if (r.vector.size() != f.dim) {
      throw SchemaError("feature row '" + r.sample_id + "' has dim " +
                        std::to_string(r.vector.size()));
    }
    content += numeric_row(r.sample_id, r.vector);
    content += '\n';
  }
  atomic_write_file(path, content);
}

FeatureFile load_feature_file(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const json header = parse_header(lines, "features", path);
  FeatureFile f;
  f.space = space_from_json(header.at("space"), 1);
  f.dim = header.at("d").get<std::size_t>();
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto [id, values] = parse_numeric_row(lines[i], f.dim, i + 1);
    ids.push_back(id);
    f.records.push_back({std::move(id), std::move(values)});
  }
  check_duplicates(ids);
  check_count(header, f.records.size(), path);
  return f;
}

void save_teacher_file(const std::filesystem::path& path, const TeacherFile& f) {
  json header = {{"kind", "teacher_logits"},
                 {"space", space_to_json(f.space)},
                 {"count", f.records.size()}};
  std::string content = header.dump();
  content += '\n';
  for (const TeacherRecord& r : f.records) {
    if (r.logits.size() != f.space->size()) {
      throw SchemaError("teacher row '" + r.sample_id + "' has " +
                        std::to_string(r.logits.size()) + " logits");
    }
    content += numeric_row(r.sample_id, r.logits);
    content += '\n';
  }
  atomic_write_file(path, content);
}

TeacherFile load_teacher_file(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const json header = parse_header(lines, "teacher_logits", path);
  TeacherFile f;
  f.space = space_from_json(header.at("space"), 1);
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto [id, values] = parse_numeric_row(lines[i], f.space->size(), i + 1);
    ids.push_back(id);
    f.records.push_back({std::move(id), std::move(values)});
  }
  check_duplicates(ids);
  check_count(header, f.records.size(), path);
  return f;
}

void save_vlm_file(const std::filesystem::path& path, const VlmFile& f) {
  json header = {{"kind", "vlm_predictions"},
                 {"space", space_to_json(f.space)},
                 {"count", f.records.size()}};
  std::string content = header.dump();
  content += '\n';
  for (const VlmPrediction& r : f.records) {
    check_sample_id(r.sample_id);
    json record = {{"sample_id", r.sample_id}, {"raw_text", r.raw_text}};
    content += record.dump();
    content += '\n';
  }
  atomic_write_file(path, content);
}

VlmFile load_vlm_file(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const json header = parse_header(lines, "vlm_predictions", path);
  VlmFile f;
  f.space = space_from_json(header.at("space"), 1);
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json record;
    try {
      record = json::parse(lines[i]);
    } catch (const json::exception& e) {
      throw ParseError("bad vlm record: " + std::string(e.what()), i + 1);
    }
    if (!record.contains("sample_id") || !record.contains("raw_text")) {
      throw ParseError("vlm record needs sample_id and raw_text", i + 1);
    }
    VlmPrediction p;
    p.sample_id = record["sample_id"].get<std::string>();
    p.raw_text = record["raw_text"].get<std::string>();
    p.parsed = try_parse_vlm_response(p.raw_text, f.space);
    ids.push_back(p.sample_id);
    f.records.push_back(std::move(p));
  }
  check_duplicates(ids);
  check_count(header, f.records.size(), path);
  return f;
}

void save_label_file(const std::filesystem::path& path, const LabelFile& f) {
  json header = {{"kind", "labels"},
                 {"space", space_to_json(f.space)},
                 {"count", f.records.size()}};
  std::string content = header.dump();
  content += '\n';
  for (const auto& [id, label] : f.records) {
    check_sample_id(id);
    if (!f.space->index_of(label)) {
      throw OutOfVocabulary("label '" + label + "' not in space '" +
                            f.space->name + "'");
    }
    content += id;
    content += '\t';
    content += label;
    content += '\n';
  }
  atomic_write_file(path, content);
}

LabelFile load_label_file(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const json header = parse_header(lines, "labels", path);
  LabelFile f;
  f.space = space_from_json(header.at("space"), 1);
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos) {
      throw ParseError("label row is missing the tab separator", i + 1);
    }
    std::string id = lines[i].substr(0, tab);
    std::string label = lines[i].substr(tab + 1);
    if (!f.space->index_of(label)) {
      throw SchemaError("label '" + label + "' not in space '" +
                        f.space->name + "'");
    }
    ids.push_back(id);
    f.records.emplace_back(std::move(id), std::move(label));
  }
  check_duplicates(ids);
  check_count(header, f.records.size(), path);
  return f;
}

}  // namespace emokd
