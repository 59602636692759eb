#pragma once

// Dataset entries (image_id, file_name, captions[{id, caption}]) as a JSON
// array, plus a line-delimited OCR sidecar with one token per line:
//
//   {"image_id": "42", "text": "bán", "cx": 0.5, "cy": 0.2, "w": 0.1,
//    "h": 0.05, "confidence": 0.93, "recognition": [...], "detection": [...]}
//
// A sidecar line may carry "image_width" and "image_height"; its box is then
// read in pixels and divided down to [0,1] units.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vnscene/records.hpp"

namespace vnscene::dataset_io {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateImageId : public std::runtime_error {
 public:
  explicit DuplicateImageId(const std::string& id)
      : std::runtime_error("duplicate image_id '" + id + "'") {}
};

class CaptionCountViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  // Strict mode turns caption-count and caption-id problems into errors.
  bool strict = false;
  int max_captions = 5;
};

struct LoadResult {
  std::vector<ImageRecord> records;
  std::vector<std::string> warnings;
};

LoadResult parse_dataset(std::string_view json_text, const LoadOptions& options = {});
// Merges sidecar tokens into `records` by image_id, in file order.
void merge_ocr_sidecar(std::string_view jsonl_text, std::vector<ImageRecord>& records,
                       std::vector<std::string>& warnings);

LoadResult load_dataset(const std::filesystem::path& dataset,
                        const std::optional<std::filesystem::path>& ocr_sidecar = std::nullopt,
                        const LoadOptions& options = {});

std::string dataset_to_json(const std::vector<ImageRecord>& records);
std::string ocr_sidecar_to_jsonl(const std::vector<ImageRecord>& records);

void save_dataset(const std::vector<ImageRecord>& records, const std::filesystem::path& dataset,
                  const std::optional<std::filesystem::path>& ocr_sidecar = std::nullopt);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace vnscene::dataset_io
