#include <doctest.h>

#include <filesystem>
#include <json.hpp>

#include "vnscene/dataset_io.hpp"
#include "vnscene/report.hpp"

using namespace vnscene;
using namespace vnscene::dataset_io;

namespace {

std::filesystem::path temp_dir() {
  auto p = std::filesystem::temp_directory_path() / "vnscene_test_io";
  std::filesystem::create_directories(p);
  return p;
}

const char* kDataset = R"([
  {"image_id": "42", "file_name": "42.jpg",
   "captions": [{"id": 1, "caption": "Biển hiệu cửa hàng"},
                {"id": 2, "caption": "một tấm bảng"},
                {"id": 3, "caption": "chữ đỏ"},
                {"id": 4, "caption": "quán phở"},
                {"id": 5, "caption": "góc phố"}]},
  {"image_id": 7, "file_name": "7.jpg", "captions": [{"id": 1, "caption": "xe máy"}]}
])";

const char* kSidecar =
    "{\"image_id\": \"42\", \"text\": \"PHỞ\", \"cx\": 0.5, \"cy\": 0.2, \"w\": 0.1, \"h\": 0.05, "
    "\"confidence\": 0.93, \"recognition\": [0.5, 1.5]}\n"
    "\n"
    "{\"image_id\": \"7\", \"text\": \"Honda\", \"cx\": 320, \"cy\": 240, \"w\": 64, \"h\": 48, "
    "\"image_width\": 640, \"image_height\": 480, \"confidence\": 0.4}\n";

}  // namespace

TEST_CASE("parse the entry format") {
  const auto r = parse_dataset(kDataset);
  REQUIRE(r.records.size() == 2);
  CHECK(r.warnings.empty());
  CHECK(r.records[0].image_id == "42");
  CHECK(r.records[0].captions.size() == 5);
  CHECK(r.records[0].captions[4].caption == "góc phố");
  CHECK(r.records[1].image_id == "7");
  // A single entry object is accepted too.
  CHECK(parse_dataset(R"({"image_id": "1", "file_name": "a", "captions": [{"id": 1, "caption": "x"}]})")
            .records.size() == 1);
}

TEST_CASE("caption count and id problems") {
  const char* zero = R"([{"image_id": "1", "file_name": "a", "captions": []}])";
  LoadOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(parse_dataset(zero, strict), ParseError);
  const auto lenient = parse_dataset(zero);
  CHECK(lenient.records.size() == 1);
  CHECK(lenient.warnings.size() == 1);

  const char* six = R"([{"image_id": "1", "file_name": "a", "captions": [
      {"id": 1, "caption": "a"}, {"id": 2, "caption": "b"}, {"id": 3, "caption": "c"},
      {"id": 4, "caption": "d"}, {"id": 5, "caption": "e"}, {"id": 6, "caption": "f"}]}])";
  CHECK_THROWS_AS(parse_dataset(six, strict), CaptionCountViolation);
  CHECK(parse_dataset(six).warnings.size() == 1);

  const char* ids = R"([{"image_id": "1", "file_name": "a", "captions": [
      {"id": 2, "caption": "a"}, {"id": 1, "caption": "b"}]}])";
  CHECK_THROWS_AS(parse_dataset(ids, strict), CaptionCountViolation);
  const auto kept = parse_dataset(ids);
  // Captions keep file order.
  CHECK(kept.records[0].captions[0].id == 2);
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(parse_dataset(R"([{"image_id": "1", "file_name": "a", "captions": [)"), ParseError);
  try {
    parse_dataset("[\n{\"image_id\": \"1\",\n \"file_name\": }\n]");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    parse_dataset(R"([{"image_id": "1", "captions": []}])");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("file_name") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_dataset(R"([{"image_id": "1", "file_name": "a", "captions": [{"id": "x", "caption": "a"}]}])"),
                  ParseError);
  CHECK_THROWS_AS(parse_dataset(R"([{"image_id": "1", "file_name": "a", "captions": [{"id": 1, "caption": "a"}]},
                                    {"image_id": 1, "file_name": "b", "captions": [{"id": 1, "caption": "b"}]}])"),
                  DuplicateImageId);
  CHECK_THROWS_AS(read_file("/nonexistent/vnscene.json"), IoError);
}

TEST_CASE("OCR sidecar") {
  auto recs = parse_dataset(kDataset).records;
  std::vector<std::string> warnings;
  merge_ocr_sidecar(kSidecar, recs, warnings);
  CHECK(warnings.empty());
  REQUIRE(recs[0].ocr_tokens.size() == 1);
  CHECK(recs[0].ocr_tokens[0].text == "PHỞ");
  CHECK(recs[0].ocr_tokens[0].confidence == 0.93);
  CHECK(recs[0].ocr_tokens[0].recognition == std::vector<double>{0.5, 1.5});
  REQUIRE(recs[1].ocr_tokens.size() == 1);
  const auto& b = recs[1].ocr_tokens[0].bbox;
  CHECK(b == BoundingBox{0.5, 0.5, 0.1, 0.1});

  merge_ocr_sidecar(R"({"image_id": "999", "text": "x", "cx": 0.1, "cy": 0.1, "w": 0.1, "h": 0.1, "confidence": 1})",
                    recs, warnings);
  CHECK(warnings.size() == 1);

  auto bad = [&](const char* line) {
    std::vector<std::string> w;
    auto copy = recs;
    merge_ocr_sidecar(line, copy, w);
  };
  CHECK_THROWS_AS(bad(R"({"image_id": "42", "text": "x", "cx": 0.1, "cy": 0.1, "w": 0, "h": 0.1, "confidence": 1})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"image_id": "42", "text": "x", "cx": 0.1, "cy": 0.1, "w": 0.1, "h": 0.1, "confidence": 1.2})"),
                  ParseError);
  try {
    bad("\n{\"image_id\": \"42\"\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("load, save, load round trip") {
  auto recs = parse_dataset(kDataset).records;
  std::vector<std::string> w;
  merge_ocr_sidecar(kSidecar, recs, w);
  const auto dir = temp_dir();
  save_dataset(recs, dir / "d.json", dir / "o.jsonl");
  const auto back = load_dataset(dir / "d.json", dir / "o.jsonl");
  CHECK(back.records == recs);
  save_dataset(back.records, dir / "d2.json", dir / "o2.jsonl");
  CHECK(read_file(dir / "d.json") == read_file(dir / "d2.json"));
  CHECK(read_file(dir / "o.jsonl") == read_file(dir / "o2.jsonl"));
  CHECK(parse_dataset(dataset_to_json(recs)).records.size() == 2);
  CHECK_THROWS_AS(write_file("/nonexistent/dir/x.json", "x"), IoError);
}

TEST_CASE("report rendering") {
  report::Report r;
  r.title = "divergence";
  r.summary = {{"images", 3LL}, {"rate", 0.408333333}};
  report::Table t{"divergence", {"stratum", "matches", "divergences", "rate"}, {}};
  t.add_row({std::string("low"), 120LL, 49LL, 49.0 / 120.0});
  t.add_row({std::string("medium"), 100LL, 25LL, 0.25});
  t.add_row({std::string("high"), 200LL, 30LL, 0.15});
  t.add_row({std::string("overall"), 420LL, 104LL, 104.0 / 420.0});
  r.tables.push_back(t);
  CHECK_THROWS_AS(t.add_row({1LL}), std::invalid_argument);

  const auto delim = report::render(r, report::Format::delimited);
  CHECK(delim.find("low\t120\t49\t0.408333\n") != std::string::npos);
  CHECK(delim.find("overall\t420\t104\t0.247619\n") != std::string::npos);
  CHECK(delim == report::render(r, report::Format::delimited));

  const auto doc = nlohmann::json::parse(report::render(r, report::Format::document));
  CHECK(doc["tables"]["divergence"]["rows"].size() == 4);
  CHECK(doc["summary"]["images"] == 3);

  const auto text = report::render(r, report::Format::table);
  CHECK(text.find("overall") != std::string::npos);

  CHECK(report::format_number(1.0 / 3.0) == "0.333333");
  CHECK(report::format_number(-0.0) == "0");
  CHECK(report::format_number(1234567.0) == "1.23457e+06");
  CHECK(report::cell_text(true) == "true");
  CHECK(report::parse_format("document") == report::Format::document);
  CHECK_THROWS(report::parse_format("xml"));
}

TEST_CASE("empty analysis gives a header-only file") {
  report::Report r;
  r.tables.push_back({"pairs", {"i", "j", "p1"}, {}});
  const auto dir = temp_dir();
  report::save_report(r, dir / "empty.tsv", report::Format::delimited);
  CHECK(read_file(dir / "empty.tsv") == "i\tj\tp1\n");
  report::save_report(r, dir / "again.tsv", report::Format::delimited);
  CHECK(read_file(dir / "again.tsv") == read_file(dir / "empty.tsv"));
  CHECK_THROWS_AS(report::save_report(r, "/nonexistent/dir/r.tsv", report::Format::delimited), IoError);
}
