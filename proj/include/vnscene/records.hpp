#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vnscene {

// Center/size box in normalized image units.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const { return w > 0.0 && h > 0.0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct OcrToken {
  std::string text;
  BoundingBox bbox;
  double confidence = 1.0;
  std::optional<std::vector<double>> recognition;
  std::optional<std::vector<double>> detection;

  friend bool operator==(const OcrToken&, const OcrToken&) = default;
};

struct Caption {
  int id = 0;
  std::string caption;

  friend bool operator==(const Caption&, const Caption&) = default;
};

struct ImageRecord {
  std::string image_id;
  std::string file_name;
  std::vector<Caption> captions;
  std::vector<OcrToken> ocr_tokens;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

}  // namespace vnscene
