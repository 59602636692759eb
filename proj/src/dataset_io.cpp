#include "vnscene/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace vnscene::dataset_io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::string entry_context(std::size_t index, const json& entry) {
  std::string ctx = "entry " + std::to_string(index);
  if (entry.is_object() && entry.contains("image_id") && entry["image_id"].is_string()) {
    ctx += " (image_id '" + entry["image_id"].get<std::string>() + "')";
  }
  return ctx;
}

template <typename T>
T required(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(ctx + ": field '" + key + "' has the wrong type");
  }
}

// image_id may be written as a string or an integer.
std::string read_image_id(const json& obj, const std::string& ctx) {
  if (!obj.contains("image_id")) throw ParseError(ctx + ": missing field 'image_id'");
  const auto& v = obj["image_id"];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(ctx + ": field 'image_id' must be a string or integer");
}

std::optional<std::vector<double>> optional_vector(const json& obj, const char* key,
                                                   const std::string& ctx) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  try {
    return obj[key].get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ParseError(ctx + ": field '" + key + "' must be an array of numbers");
  }
}

}  // namespace

LoadResult parse_dataset(std::string_view json_text, const LoadOptions& options) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("dataset: line " + std::to_string(line_of(json_text, e.byte)) + ": " +
                     e.what());
  }
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array()) throw ParseError("dataset: top level must be an array of entries");

  LoadResult result;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    const auto ctx = entry_context(i, entry);
    if (!entry.is_object()) throw ParseError(ctx + ": entry must be an object");
    ImageRecord rec;
    rec.image_id = read_image_id(entry, ctx);
    rec.file_name = required<std::string>(entry, "file_name", ctx);
    if (!entry.contains("captions") || !entry["captions"].is_array()) {
      throw ParseError(ctx + ": missing array field 'captions'");
    }
    for (std::size_t k = 0; k < entry["captions"].size(); ++k) {
      const auto& c = entry["captions"][k];
      const auto cctx = ctx + ", captions[" + std::to_string(k) + "]";
      if (!c.is_object()) throw ParseError(cctx + ": caption must be an object");
      rec.captions.push_back(
          Caption{required<int>(c, "id", cctx), required<std::string>(c, "caption", cctx)});
    }

    std::string problem;
    const auto n = static_cast<int>(rec.captions.size());
    if (n == 0) {
      problem = "has no captions";
    } else if (n > options.max_captions) {
      problem = "has " + std::to_string(n) + " captions (limit " +
                std::to_string(options.max_captions) + ")";
    } else {
      for (int k = 0; k < n; ++k) {
        if (rec.captions[static_cast<std::size_t>(k)].id != k + 1) {
          problem = "caption ids are not 1.." + std::to_string(n);
          break;
        }
      }
    }
    if (!problem.empty()) {
      if (options.strict) {
        if (n == 0) throw ParseError(ctx + ": " + problem);
        throw CaptionCountViolation(ctx + ": " + problem);
      }
      result.warnings.push_back(ctx + ": " + problem);
    }

    if (!seen.emplace(rec.image_id, i).second) throw DuplicateImageId(rec.image_id);
    result.records.push_back(std::move(rec));
  }
  return result;
}

void merge_ocr_sidecar(std::string_view jsonl_text, std::vector<ImageRecord>& records,
                       std::vector<std::string>& warnings) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].image_id, i);

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl_text.size()) {
    const auto end = std::min(jsonl_text.find('\n', start), jsonl_text.size());
    const auto line = jsonl_text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl_text.size()) break;
      continue;
    }
    const auto ctx = "ocr sidecar line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    if (!obj.is_object()) throw ParseError(ctx + ": record must be an object");

    OcrToken tok;
    const auto image_id = read_image_id(obj, ctx);
    tok.text = required<std::string>(obj, "text", ctx);
    tok.bbox = {required<double>(obj, "cx", ctx), required<double>(obj, "cy", ctx),
                required<double>(obj, "w", ctx), required<double>(obj, "h", ctx)};
    if (obj.contains("image_width") || obj.contains("image_height")) {
      const auto width = required<double>(obj, "image_width", ctx);
      const auto height = required<double>(obj, "image_height", ctx);
      if (!(width > 0.0) || !(height > 0.0)) {
        throw ParseError(ctx + ": image dimensions must be positive");
      }
      tok.bbox.cx /= width;
      tok.bbox.w /= width;
      tok.bbox.cy /= height;
      tok.bbox.h /= height;
    }
    if (!tok.bbox.valid()) throw ParseError(ctx + ": box width and height must be positive");
    tok.confidence = required<double>(obj, "confidence", ctx);
    if (!(tok.confidence >= 0.0 && tok.confidence <= 1.0)) {
      throw ParseError(ctx + ": confidence must lie in [0, 1]");
    }
    tok.recognition = optional_vector(obj, "recognition", ctx);
    tok.detection = optional_vector(obj, "detection", ctx);

    auto it = index.find(image_id);
    if (it == index.end()) {
      warnings.push_back(ctx + ": unknown image_id '" + image_id + "', token skipped");
      continue;
    }
    records[it->second].ocr_tokens.push_back(std::move(tok));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

LoadResult load_dataset(const std::filesystem::path& dataset,
                        const std::optional<std::filesystem::path>& ocr_sidecar,
                        const LoadOptions& options) {
  auto result = parse_dataset(read_file(dataset), options);
  if (ocr_sidecar) merge_ocr_sidecar(read_file(*ocr_sidecar), result.records, result.warnings);
  return result;
}

std::string dataset_to_json(const std::vector<ImageRecord>& records) {
  ordered_json doc = ordered_json::array();
  for (const auto& rec : records) {
    ordered_json entry;
    entry["image_id"] = rec.image_id;
    entry["file_name"] = rec.file_name;
    entry["captions"] = ordered_json::array();
    for (const auto& c : rec.captions) {
      ordered_json cap;
      cap["id"] = c.id;
      cap["caption"] = c.caption;
      entry["captions"].push_back(std::move(cap));
    }
    doc.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::string ocr_sidecar_to_jsonl(const std::vector<ImageRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    for (const auto& tok : rec.ocr_tokens) {
      ordered_json line;
      line["image_id"] = rec.image_id;
      line["text"] = tok.text;
      line["cx"] = tok.bbox.cx;
      line["cy"] = tok.bbox.cy;
      line["w"] = tok.bbox.w;
      line["h"] = tok.bbox.h;
      line["confidence"] = tok.confidence;
      if (tok.recognition) line["recognition"] = *tok.recognition;
      if (tok.detection) line["detection"] = *tok.detection;
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

void save_dataset(const std::vector<ImageRecord>& records, const std::filesystem::path& dataset,
                  const std::optional<std::filesystem::path>& ocr_sidecar) {
  write_file(dataset, dataset_to_json(records));
  if (ocr_sidecar) write_file(*ocr_sidecar, ocr_sidecar_to_jsonl(records));
}

}  // namespace vnscene::dataset_io
