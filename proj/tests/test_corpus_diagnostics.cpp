#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vnscene/corpus_diagnostics.hpp"

using namespace vnscene;
using namespace vnscene::diagnostics;
using orthography::Tone;

namespace {

ImageRecord image(std::string id, std::vector<std::string> captions,
                  std::vector<std::pair<std::string, double>> ocr) {
  ImageRecord r;
  r.image_id = std::move(id);
  r.file_name = r.image_id + ".jpg";
  int n = 1;
  for (auto& c : captions) r.captions.push_back({n++, std::move(c)});
  for (auto& [text, conf] : ocr) r.ocr_tokens.push_back({text, {0.5, 0.5, 0.1, 0.1}, conf, {}, {}});
  return r;
}

std::string label(const char* a, const char* b, ClassifyOptions o = {}) {
  return classify_error(a, b, o).label();
}

}  // namespace

TEST_CASE("canonical words") {
  CHECK(canonical_word("“Hoá,") == "hoá");
  CHECK(base_form("Đồng!") == "dong");
  CHECK(caption_words("Biển hiệu: Cà Phê!") == std::vector<std::string>{"biển", "hiệu", "cà", "phê"});
}

TEST_CASE("collision rate examples") {
  const auto ma = collision_rate({{"ma", 1}, {"mà", 1}, {"má", 1}, {"mả", 1}, {"mã", 1}, {"mạ", 1}});
  CHECK(ma.rate == 1.0);
  REQUIRE(ma.groups.size() == 1);
  CHECK(ma.groups[0].members.size() == 6);
  CHECK(ma.groups[0].danger_score == 36);

  CHECK(collision_rate({{"xanh", 3}, {"tím", 2}}).rate == 0.0);

  const std::map<std::string, long long> ten = {{"bán", 1}, {"ban", 2}, {"đồng", 1}, {"dòng", 4},
                                                {"xanh", 1}, {"tím", 1},  {"cây", 1},  {"nhà", 1},
                                                {"sách", 1}, {"phở", 1}};
  const auto r = collision_rate(ten);
  CHECK(r.rate == doctest::Approx(0.4));
  REQUIRE(r.groups.size() == 2);
  // dong: 2 members x 5 = 10 ranks above ban: 2 x 3 = 6.
  CHECK(r.groups[0].base == "dong");
  CHECK(r.groups[0].danger_score == 10);
  CHECK(r.groups[1].danger_score == 6);

  CHECK_THROWS_AS(collision_rate({{"shop", 1}, {"123", 4}}), EmptyVocabulary);
  CHECK_THROWS_AS(collision_rate({}), EmptyVocabulary);
}

TEST_CASE("collision keys fold case and tone placement") {
  const auto r = collision_rate({{"Hoa", 1}, {"hoa", 2}, {"hóa", 1}, {"hoá", 3}, {"Samsung", 9}});
  CHECK(r.vietnamese_words == 2);
  REQUIRE(r.groups.size() == 1);
  CHECK(r.groups[0].total_frequency == 7);
  CHECK(r.groups[0].members == std::vector<std::string>{"hoa", "hoá"});
}

TEST_CASE("collision rate equals the pairwise oracle on random vocabularies") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pool = {"ma",  "mà",  "má",   "mả",   "bán", "ban", "bàn", "đồng",
                                         "dòng", "đông", "tài", "tải", "tai", "xanh", "tím", "nhà",
                                         "nhá", "cây",  "phở", "pho",  "hoa", "hỏa", "sách", "sạch"};
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, long long> vocab;
    const auto n = 1 + rng() % pool.size();
    for (std::size_t i = 0; i < n; ++i) vocab[pool[rng() % pool.size()]] += 1 + rng() % 5;
    std::vector<std::string> words;
    for (const auto& [w, f] : vocab) words.push_back(w);
    const auto r = collision_rate(vocab);
    CHECK(r.rate == doctest::Approx(oracle::collision_rate(words)).epsilon(1e-12));
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      const auto& grp = r.groups[g];
      CHECK(grp.members.size() >= 2);
      CHECK(grp.danger_score == static_cast<long long>(grp.members.size()) * grp.total_frequency);
      if (g > 0) CHECK(r.groups[g - 1].danger_score >= grp.danger_score);
    }
  }
}

TEST_CASE("strata") {
  CHECK(stratum_of(0.31) == Stratum::low);
  CHECK(stratum_of(0.5) == Stratum::medium);
  CHECK(stratum_of(0.79) == Stratum::medium);
  CHECK(stratum_of(0.8) == Stratum::high);
}

TEST_CASE("divergence analysis examples") {
  const std::vector<ImageRecord> a = {image("1", {"hóa"}, {{"hoa", 0.31}})};
  const auto r = divergence_analysis(a);
  CHECK(r.at(Stratum::low).matches == 1);
  CHECK(r.at(Stratum::low).divergences == 1);
  CHECK(r.overall.matches == 1);

  const std::vector<ImageRecord> b = {image("1", {"hoa"}, {{"hoa", 0.9}})};
  const auto s = divergence_analysis(b);
  CHECK(s.at(Stratum::high).matches == 1);
  CHECK(s.at(Stratum::high).divergences == 0);
  CHECK(s.at(Stratum::low).rate() == 0.0);
}

TEST_CASE("divergence stratum counts add up to the overall counts") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"hoá", "hoa", "bán", "ban", "đồng", "dòng", "shop"};
  std::vector<ImageRecord> recs;
  for (int i = 0; i < 30; ++i) {
    std::vector<std::pair<std::string, double>> ocr;
    for (int k = 0; k < 3; ++k) ocr.emplace_back(words[rng() % words.size()], (rng() % 100) / 100.0);
    recs.push_back(image(std::to_string(i),
                         {words[rng() % words.size()] + " " + words[rng() % words.size()]}, ocr));
  }
  const auto r = divergence_analysis(recs);
  long long m = 0;
  long long d = 0;
  for (auto s : kAllStrata) {
    m += r.at(s).matches;
    d += r.at(s).divergences;
  }
  CHECK(m == r.overall.matches);
  CHECK(d == r.overall.divergences);
  CHECK(r.pairs.size() == static_cast<std::size_t>(m));
  for (const auto& p : r.pairs) {
    CHECK(oracle::full_strip(p.caption_token) == oracle::full_strip(p.ocr_token));
    CHECK(p.agrees == (canonical_word(p.caption_token) == canonical_word(p.ocr_token)));
  }
}

TEST_CASE("error taxonomy fixtures") {
  CHECK(label("hóa", "hoa") == "T1");
  CHECK(label("tài", "tải") == "T2");
  CHECK(label("nghiệm", "nghiẹm") == "T3");
  CHECK(label("dẫn", "đẫn") == "T4");
  CHECK(label("hoa", "hóa") == "T5");
  const auto n = classify_error("nguyễn", "nguyên");
  CHECK(n.compound());
  CHECK(n.label() == "T1+T3");
  CHECK(classify_error("hoa", "hoa").empty());
  // Moving the mark between vowels is a spelling variant, not an error.
  CHECK(classify_error("hóa", "hoá").empty());
  CHECK(label("Hóa", "HOA") == "T1");
  CHECK_THROWS_AS(classify_error("hoa", "hoc"), NotComparable);
}

TEST_CASE("stacked-mark option") {
  ClassifyOptions off;
  off.stacked_mark_is_variant = false;
  CHECK(label("nguyễn", "nguyên", off) == "T1");
  CHECK(label("nguyễn", "nguyên") == "T1+T3");
  // Tone change on a plain vowel is unaffected by the option.
  CHECK(label("tài", "tải", off) == "T2");
}

TEST_CASE("T1 and T5 never share a position") {
  const std::vector<std::pair<const char*, const char*>> pairs = {
      {"hóa", "hoa"}, {"hoa", "hóa"}, {"tài", "tải"}, {"nguyễn", "nguyên"}, {"dẫn", "đân"},
      {"đồng", "dong"}, {"ươ", "uơ"}, {"bán", "bân"}, {"mạ", "ma"}};
  for (auto [a, b] : pairs) {
    const auto l = classify_error(a, b);
    CHECK_FALSE((l.types.count(ErrorType::T1) && l.types.count(ErrorType::T5)));
    CHECK(l.compound() == (l.types.size() > 1));
  }
}

TEST_CASE("confusion matrices") {
  std::vector<ErrorInstance> drops(3, ErrorInstance{"má", "ma", classify_error("má", "ma")});
  const auto m = confusion_matrices(drops);
  CHECK(m.tone[std::size_t(Tone::sac)][std::size_t(Tone::ngang)] == 3);
  CHECK(m.tone[std::size_t(Tone::ngang)][std::size_t(Tone::sac)] == 0);

  std::vector<ErrorInstance> d;
  for (int i = 0; i < 4; ++i) d.push_back({"dẫn", "đẫn", classify_error("dẫn", "đẫn")});
  d.push_back({"đẫn", "dẫn", classify_error("đẫn", "dẫn")});
  const auto dm = confusion_matrices(d);
  CHECK(dm.d_stroke[0][1] == 4);
  CHECK(dm.d_stroke[1][0] == 1);

  const auto z = confusion_matrices({});
  for (const auto& row : z.tone) {
    for (auto v : row) CHECK(v == 0);
  }

  std::vector<ErrorInstance> v = {{"bân", "bán", {}}, {"ơ", "o", {}}};
  const auto vm = confusion_matrices(v);
  CHECK(vm.vowel[2][0] == 1);  // â -> a
  CHECK(vm.vowel[7][5] == 1);  // ơ -> o
}

TEST_CASE("coverage and usage categories") {
  // All four OCR tokens quoted exactly.
  auto verbatim = image("1", {"cửa hàng điện thoại bán nhanh"},
                        {{"cửa", 1}, {"hàng", 1}, {"điện", 1}, {"thoại", 1}});
  CHECK(coverage_rate(verbatim, 0, Stopwords::from_text("")) == 1.0);
  CHECK(usage_taxonomy(verbatim, 0, Stopwords::from_text("")).category ==
        UsageCategory::verbatim_heavy);

  // One of ten tokens.
  std::vector<std::pair<std::string, double>> ten;
  for (const char* w : {"alpha", "beta", "gamma", "delta", "zeta", "theta", "kappa", "sigma",
                        "omega", "lambda"}) {
    ten.emplace_back(w, 0.9);
  }
  auto contextual = image("2", {"tấm biển alpha"}, ten);
  CHECK(coverage_rate(contextual, 0) == doctest::Approx(0.1));
  CHECK(usage_taxonomy(contextual, 0).category == UsageCategory::contextual_inference);

  // Two of eight: partial.
  std::vector<std::pair<std::string, double>> eight(ten.begin(), ten.begin() + 8);
  auto partial = image("3", {"alpha và beta"}, eight);
  const auto pc = coverage(partial, 0);
  CHECK(pc.valid_tokens == 8);
  CHECK(pc.coverage() == 0.25);
  CHECK(usage_category(pc) == UsageCategory::partial_reference);

  // Base-form matches outnumber exact ones: paraphrase.
  auto para = image("4", {"cua hang dien"}, {{"cửa", 1}, {"hàng", 1}, {"điện", 1}});
  const auto p = coverage(para, 0, Stopwords::from_text(""));
  CHECK(p.base_form == 3);
  CHECK(usage_category(p) == UsageCategory::paraphrase_heavy);

  auto none = image("5", {"x"}, {{"a", 1}, {"và", 1}});
  CHECK_THROWS_AS(coverage(none, 0), NoValidOcrTokens);
  CHECK_THROWS_AS(coverage(verbatim, 3), std::out_of_range);
}

TEST_CASE("usage thresholds at the boundaries") {
  auto make = [](std::size_t valid, std::size_t exact, std::size_t base) {
    CoverageResult c;
    c.valid_tokens = valid;
    c.exact = exact;
    c.base_form = base;
    return usage_category(c);
  };
  CHECK(make(100, 14, 0) == UsageCategory::contextual_inference);
  CHECK(make(100, 15, 0) == UsageCategory::partial_reference);
  CHECK(make(100, 30, 0) == UsageCategory::partial_reference);
  CHECK(make(100, 31, 0) == UsageCategory::verbatim_heavy);
  CHECK(make(100, 16, 16) == UsageCategory::paraphrase_heavy);
  CHECK(make(100, 17, 16) == UsageCategory::verbatim_heavy);
}

TEST_CASE("substring matches track both directions") {
  auto r = image("1", {"siêuthị lớn"}, {{"siêu", 1}, {"thịnh", 1}, {"lớnnhất", 1}});
  const auto c = coverage(r, 0, Stopwords::from_text(""));
  CHECK(c.exact == 0);
  CHECK(c.substring_ocr_in_caption == 1);
  CHECK(c.substring_caption_in_ocr == 1);
  CHECK(c.coverage() == doctest::Approx(2.0 / 3.0));
  CHECK(c.coverage_ocr_in_caption() == doctest::Approx(1.0 / 3.0));
  CHECK(c.coverage_caption_in_ocr() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("stopwords") {
  const auto s = Stopwords::from_text("# comment\nvà\n\n  của  \n");
  CHECK(s.size() == 2);
  CHECK(s.contains("và"));
  CHECK(s.contains("của"));
  CHECK(Stopwords::builtin().size() > 10);
  const auto r = image("1", {"x"}, {{"và", 1}, {"a", 1}, {"Phở", 1}, {"phở", 1}});
  CHECK(valid_ocr_tokens(r, s) == std::vector<std::string>{"phở", "phở"});
}

TEST_CASE("copy classification") {
  auto r = image("1", {"bán màu", "Bán"}, {{"bán", 1}});
  auto c = copy_classification(r);
  REQUIRE(c.size() == 2);
  CHECK(c[0][0].label == CopyLabel::exact_copy);
  CHECK(c[0][1].label == CopyLabel::generated);
  CHECK(c[1][0].label == CopyLabel::exact_copy);
  auto b = image("2", {"bán"}, {{"ban", 1}});
  CHECK(copy_classification(b)[0][0].label == CopyLabel::base_form_copy);
  auto e = image("3", {"màu"}, {});
  CHECK(copy_classification(e)[0][0].label == CopyLabel::generated);
}
