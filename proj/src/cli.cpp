#include "vnscene/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "vnscene/caption_metrics.hpp"
#include "vnscene/corpus_diagnostics.hpp"
#include "vnscene/dataset_io.hpp"
#include "vnscene/fusion_kernel.hpp"
#include "vnscene/phono_features.hpp"
#include "vnscene/report.hpp"
#include "vnscene/syllable.hpp"
#include "vnscene/tokenizer.hpp"

namespace vnscene::cli {

namespace {

using report::Cell;
using report::Report;
using report::Table;

// Input that cannot be read or parsed; maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string format = "table";
  std::string inventory;
  std::string stopwords;
  std::string config;
  std::uint64_t seed = 0;
  std::string scale = "x10";
  std::string tokenizer = "syllable";
  bool all_tokenizers = false;
  bool strict = false;

  std::vector<std::string> tokens;
  std::string token_file;
  std::string dataset;
  std::string ocr;
  std::string instance;
  std::string candidates;
  std::string references;
  int top = 20;
  bool gradcheck = false;
  bool random_weights = false;
};

const syllable::SyllableInventory& inventory(const Options& o) {
  static std::optional<syllable::SyllableInventory> loaded;
  static std::string loaded_from;
  if (o.inventory.empty()) return syllable::SyllableInventory::builtin();
  if (!loaded || loaded_from != o.inventory) {
    try {
      loaded = syllable::SyllableInventory::load(o.inventory);
    } catch (const syllable::InventoryError& e) {
      throw InputError(e.what());
    }
    loaded_from = o.inventory;
  }
  return *loaded;
}

diagnostics::Stopwords stopwords(const Options& o) {
  if (o.stopwords.empty()) return diagnostics::Stopwords::builtin();
  return diagnostics::Stopwords::load(o.stopwords);
}

void emit(const Report& r, const Options& o, std::ostream& out, std::ostream& err) {
  for (const auto& n : r.notices) err << "note: " << n << "\n";
  Report data = r;
  data.notices.clear();
  out << report::render(data, report::parse_format(o.format));
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += sep;
    s += x;
  }
  return s;
}

// ---- analyze ---------------------------------------------------------------

Report cmd_analyze(const Options& o) {
  auto tokens = o.tokens;
  if (!o.token_file.empty()) {
    for (auto& t : tokenize::space_split(dataset_io::read_file(o.token_file))) tokens.push_back(t);
  }
  const auto& inv = inventory(o);
  Report r;
  r.title = "token analysis";
  Table t{"tokens",
          {"token", "vietnamese", "tone", "tone_class", "toneless", "base", "onset", "medial",
           "nucleus", "coda", "reason"},
          {}};
  for (const auto& tok : tokens) {
    const auto a = syllable::analyze_token(tok, inv);
    std::string tone;
    std::string tone_class;
    if (a.tone) {
      tone = orthography::tone_name(*a.tone);
      tone_class = orthography::tone_class_name(orthography::tone_class(*a.tone));
    }
    const auto s = a.syllable.value_or(syllable::Syllable{});
    t.add_row({a.original, a.vietnamese, tone, tone_class, a.toneless, a.base, s.onset, s.medial,
               s.nucleus, s.coda, a.reason});
  }
  r.tables.push_back(std::move(t));
  return r;
}

// ---- features --------------------------------------------------------------

// One token per line; blank lines skipped.
std::vector<std::string> read_token_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(dataset_io::read_file(path));
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

Report cmd_features(const Options& o) {
  auto tokens = o.tokens;
  if (!o.token_file.empty()) {
    for (auto& t : read_token_lines(o.token_file)) tokens.push_back(std::move(t));
  }
  Report r;
  r.title = "phonological pair features";
  Table t{"pairs",
          {"i", "j", "token_i", "token_j", "p1_onset", "p2_nucleus", "p3_coda", "p4_rhyme",
           "p5_tone", "p6_tone_class", "p7_base", "p8_vietnamese", "packed"},
          {}};
  if (!tokens.empty()) {
    const auto tensor = phono::build_tensor(tokens, inventory(o));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      for (std::size_t j = i; j < tokens.size(); ++j) {
        std::vector<Cell> row{static_cast<long long>(i), static_cast<long long>(j), tokens[i],
                              tokens[j]};
        for (bool f : tensor.at(i, j).flags()) row.emplace_back(static_cast<long long>(f));
        row.emplace_back(static_cast<long long>(tensor.packed(i, j)));
        t.add_row(std::move(row));
      }
    }
  }
  r.tables.push_back(std::move(t));
  return r;
}

// ---- diagnose --------------------------------------------------------------

void add_collisions(Report& r, std::span<const ImageRecord> records, const Options& o) {
  try {
    const auto c = diagnostics::collision_rate(diagnostics::caption_vocabulary(records), inventory(o));
    r.summary.emplace_back("collision_rate", c.rate);
    r.summary.emplace_back("vietnamese_words", static_cast<long long>(c.vietnamese_words));
    r.summary.emplace_back("words_in_collision_groups", static_cast<long long>(c.words_in_groups));
    r.summary.emplace_back("collision_groups", static_cast<long long>(c.groups.size()));
    Table t{"collision_groups", {"base", "size", "members", "total_frequency", "danger_score"}, {}};
    for (std::size_t i = 0; i < c.groups.size() && static_cast<int>(i) < o.top; ++i) {
      const auto& g = c.groups[i];
      t.add_row({g.base, static_cast<long long>(g.members.size()), join(g.members, " "),
                 g.total_frequency, g.danger_score});
    }
    r.tables.push_back(std::move(t));
  } catch (const diagnostics::EmptyVocabulary&) {
    r.notices.push_back("no Vietnamese words in captions; collision analysis skipped");
  }
}

void add_ocr_analyses(Report& r, std::span<const ImageRecord> records, const Options& o) {
  namespace dg = diagnostics;
  const auto div = dg::divergence_analysis(records);
  Table strata{"divergence", {"stratum", "matches", "divergences", "rate"}, {}};
  for (auto s : dg::kAllStrata) {
    const auto& st = div.at(s);
    strata.add_row({std::string(dg::stratum_name(s)), st.matches, st.divergences, st.rate()});
  }
  strata.add_row({std::string("overall"), div.overall.matches, div.overall.divergences,
                  div.overall.rate()});
  r.tables.push_back(std::move(strata));

  // Every aligned pair feeds the confusion matrices; only mismatches count as errors.
  std::vector<dg::ErrorInstance> aligned;
  std::vector<dg::ErrorInstance> errors;
  for (const auto& p : div.pairs) {
    auto label = p.agrees ? dg::ErrorLabel{} : dg::classify_error(p.caption_token, p.ocr_token);
    aligned.push_back({p.caption_token, p.ocr_token, label});
    if (!label.empty()) errors.push_back({p.caption_token, p.ocr_token, std::move(label)});
  }
  std::map<dg::ErrorType, long long> counts;
  long long compound = 0;
  long long instances = 0;
  for (const auto& e : errors) {
    for (auto t : e.label.types) ++counts[t];
    instances += static_cast<long long>(e.label.types.size());
    compound += e.label.compound();
  }
  Table tax{"error_taxonomy", {"type", "description", "count", "share"}, {}};
  for (auto t : dg::kAllErrorTypes) {
    tax.add_row({std::string(dg::error_type_name(t)), std::string(dg::error_type_description(t)),
                 counts[t], instances ? double(counts[t]) / double(instances) : 0.0});
  }
  const auto words = static_cast<long long>(errors.size());
  tax.add_row({std::string("compound"), std::string("words with more than one type"), compound,
               words ? double(compound) / double(words) : 0.0});
  r.summary.emplace_back("erroneous_words", words);
  r.tables.push_back(std::move(tax));

  const auto cm = dg::confusion_matrices(aligned);
  std::vector<std::string> cols{"reference"};
  for (auto t : orthography::kAllTones) cols.emplace_back(orthography::tone_name(t));
  Table tone{"tone_confusion", cols, {}};
  for (auto a : orthography::kAllTones) {
    std::vector<Cell> row{std::string(orthography::tone_name(a))};
    for (auto b : orthography::kAllTones) {
      row.emplace_back(cm.tone[std::size_t(a)][std::size_t(b)]);
    }
    tone.add_row(std::move(row));
  }
  r.tables.push_back(std::move(tone));
  Table dd{"d_stroke_confusion", {"reference", "d", "đ"}, {}};
  dd.add_row({std::string("d"), cm.d_stroke[0][0], cm.d_stroke[0][1]});
  dd.add_row({std::string("đ"), cm.d_stroke[1][0], cm.d_stroke[1][1]});
  r.tables.push_back(std::move(dd));

  const auto sw = stopwords(o);
  std::map<dg::UsageCategory, long long> usage;
  long long classified = 0;
  long long unclassifiable = 0;
  double cov_sum = 0.0;
  double cov_oic = 0.0;
  double cov_cio = 0.0;
  std::map<dg::CopyLabel, long long> copies;
  for (const auto& rec : records) {
    for (std::size_t c = 0; c < rec.captions.size(); ++c) {
      try {
        const auto cov = dg::coverage(rec, c, sw);
        ++usage[dg::usage_category(cov)];
        ++classified;
        cov_sum += cov.coverage();
        cov_oic += cov.coverage_ocr_in_caption();
        cov_cio += cov.coverage_caption_in_ocr();
      } catch (const dg::NoValidOcrTokens&) {
        ++unclassifiable;
      }
    }
    for (const auto& caption : dg::copy_classification(rec)) {
      for (const auto& tok : caption) ++copies[tok.label];
    }
  }
  Table ut{"usage_taxonomy", {"category", "captions", "share"}, {}};
  for (auto c : dg::kAllUsageCategories) {
    ut.add_row({std::string(dg::usage_category_name(c)), usage[c],
                classified ? double(usage[c]) / double(classified) : 0.0});
  }
  r.tables.push_back(std::move(ut));
  r.summary.emplace_back("captions_classified", classified);
  r.summary.emplace_back("captions_without_valid_ocr", unclassifiable);
  const double denom = classified ? double(classified) : 1.0;
  r.summary.emplace_back("mean_coverage", cov_sum / denom);
  r.summary.emplace_back("mean_coverage_ocr_in_caption", cov_oic / denom);
  r.summary.emplace_back("mean_coverage_caption_in_ocr", cov_cio / denom);

  Table ct{"copy_classification", {"label", "tokens", "share"}, {}};
  long long total = 0;
  for (const auto& [l, n] : copies) total += n;
  for (auto l : {dg::CopyLabel::exact_copy, dg::CopyLabel::base_form_copy, dg::CopyLabel::generated}) {
    ct.add_row({std::string(dg::copy_label_name(l)), copies[l],
                total ? double(copies[l]) / double(total) : 0.0});
  }
  r.tables.push_back(std::move(ct));
}

Report cmd_diagnose(const Options& o) {
  dataset_io::LoadOptions lo;
  lo.strict = o.strict;
  std::optional<std::filesystem::path> sidecar;
  if (!o.ocr.empty()) sidecar = o.ocr;
  const auto loaded = dataset_io::load_dataset(o.dataset, sidecar, lo);
  Report r;
  r.title = "corpus diagnostics";
  r.notices = loaded.warnings;
  r.summary.emplace_back("images", static_cast<long long>(loaded.records.size()));
  add_collisions(r, loaded.records, o);
  if (!sidecar) {
    r.notices.push_back(
        "no OCR sidecar given; divergence, error taxonomy, coverage and copy analyses skipped");
  } else {
    add_ocr_analyses(r, loaded.records, o);
  }
  return r;
}

// ---- attention -------------------------------------------------------------

struct Instance {
  std::vector<std::string> texts;
  std::vector<BoundingBox> t_boxes;
  std::vector<double> confidences;
  std::vector<BoundingBox> v_boxes;
};

Instance read_instance(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(dataset_io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  auto box = [&](const nlohmann::json& b, const std::string& ctx) {
    try {
      return BoundingBox{b.at("cx").get<double>(), b.at("cy").get<double>(),
                         b.at("w").get<double>(), b.at("h").get<double>()};
    } catch (const nlohmann::json::exception&) {
      throw InputError(path + ": " + ctx + " needs numeric cx, cy, w, h");
    }
  };
  Instance in;
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    throw InputError(path + ": expected an object with a 'tokens' array");
  }
  for (std::size_t i = 0; i < j["tokens"].size(); ++i) {
    const auto& t = j["tokens"][i];
    const auto ctx = "tokens[" + std::to_string(i) + "]";
    if (!t.contains("text") || !t["text"].is_string()) throw InputError(path + ": " + ctx + " needs text");
    in.texts.push_back(t["text"].get<std::string>());
    in.t_boxes.push_back(box(t, ctx));
    const double c = t.value("confidence", 1.0);
    if (!(c >= 0.0 && c <= 1.0)) throw InputError(path + ": " + ctx + " confidence outside [0, 1]");
    in.confidences.push_back(c);
  }
  if (j.contains("visual")) {
    for (std::size_t i = 0; i < j["visual"].size(); ++i) {
      in.v_boxes.push_back(box(j["visual"][i], "visual[" + std::to_string(i) + "]"));
    }
  }
  return in;
}

Report cmd_attention(const Options& o) {
  fusion::GraphConfig cfg = fusion::GraphConfig::desk_scale();
  if (!o.config.empty()) {
    try {
      cfg = fusion::GraphConfig::from_json_text(dataset_io::read_file(o.config));
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  const auto in = read_instance(o.instance);
  fusion::NodeSet nodes;
  nodes.t_features = fusion::stub_embedding(in.texts, cfg.model_dim, o.seed);
  std::vector<std::string> visual_keys;
  for (std::size_t i = 0; i < in.v_boxes.size(); ++i) visual_keys.push_back("visual:" + std::to_string(i));
  nodes.v_features = fusion::stub_embedding(visual_keys, cfg.model_dim, o.seed);
  nodes.t_boxes = in.t_boxes;
  nodes.v_boxes = in.v_boxes;
  nodes.confidences = in.confidences;
  if (!in.texts.empty()) nodes.phono = phono::build_tensor(in.texts, inventory(o));

  const auto params = o.random_weights || o.gradcheck ? fusion::GraphParams::random(cfg, o.seed)
                                                      : fusion::GraphParams::init(cfg, o.seed);
  const auto out = fusion::graph_forward(nodes, cfg, params);

  Report r;
  r.title = "fusion graph attention";
  r.summary.emplace_back("text_nodes", static_cast<long long>(in.texts.size()));
  r.summary.emplace_back("visual_nodes", static_cast<long long>(in.v_boxes.size()));
  r.summary.emplace_back("layers", static_cast<long long>(cfg.layers));
  r.summary.emplace_back("heads", static_cast<long long>(cfg.heads));
  r.summary.emplace_back("model_dim", static_cast<long long>(cfg.model_dim));
  r.summary.emplace_back("parameters", static_cast<long long>(params.parameter_count()));
  r.summary.emplace_back("phono_bias_parameters_per_layer",
                         static_cast<long long>(fusion::phono_bias_parameter_count(params.layers.front())));
  r.summary.emplace_back("residual_coefficient", fusion::sigmoid(params.alpha(0, 0)));

  auto node_name = [&](bool text, Eigen::Index i) {
    return text ? in.texts[std::size_t(i)] : visual_keys[std::size_t(i)];
  };
  Table t{"attention",
          {"layer", "edge", "head", "query", "key", "score", "weight", "gated"},
          {}};
  for (std::size_t l = 0; l < out.traces.size(); ++l) {
    for (const auto& tr : out.traces[l]) {
      for (std::size_t h = 0; h < tr.scores.size(); ++h) {
        const auto& s = tr.scores[h];
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
          for (Eigen::Index k = 0; k < s.cols(); ++k) {
            t.add_row({static_cast<long long>(l), fusion::edge_type_name(tr.edge),
                       static_cast<long long>(h), node_name(fusion::target_is_text(tr.edge), i),
                       node_name(fusion::source_is_text(tr.edge), k), s(i, k), tr.weights[h](i, k),
                       tr.gated[h](i, k)});
          }
        }
      }
    }
  }
  r.tables.push_back(std::move(t));

  if (o.gradcheck) {
    std::mt19937_64 rng(o.seed + 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const fusion::Matrix up_v = fusion::Matrix::NullaryExpr(
        nodes.v_features.rows(), cfg.model_dim, [&] { return u(rng); });
    const fusion::Matrix up_t = fusion::Matrix::NullaryExpr(
        nodes.t_features.rows(), cfg.model_dim, [&] { return u(rng); });
    const auto gc = fusion::gradient_check(nodes, cfg, params, up_v, up_t);
    r.summary.emplace_back("gradcheck_max_relative_error", gc.max_relative_error);
    r.summary.emplace_back("gradcheck_parameters", static_cast<long long>(gc.parameters_checked));
    r.summary.emplace_back("gradcheck_worst_tensor", gc.worst.tensor);
    Table g{"gradient_check", {"tensor", "max_relative_error"}, {}};
    for (const auto& [name, err] : gc.per_tensor) g.add_row({name, err});
    r.tables.push_back(std::move(g));
  }
  return r;
}

// ---- score -----------------------------------------------------------------

Report cmd_score(const Options& o) {
  std::vector<std::pair<std::string, std::string>> cands;
  {
    const auto text = dataset_io::read_file(o.candidates);
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      start = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw InputError(o.candidates + ": line " + std::to_string(line_no) +
                         ": expected image_id<TAB>caption");
      }
      cands.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  dataset_io::LoadOptions lo;
  lo.strict = o.strict;
  const auto refs = dataset_io::parse_dataset(dataset_io::read_file(o.references), lo);
  std::map<std::string, const ImageRecord*> by_id;
  for (const auto& rec : refs.records) by_id[rec.image_id] = &rec;

  metrics::Corpus corpus;
  for (const auto& [id, caption] : cands) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw metrics::EmptyCorpus("no references for image '" + id + "'");
    corpus.candidates.push_back(caption);
    auto& rs = corpus.references.emplace_back();
    for (const auto& c : it->second->captions) rs.push_back(c.caption);
  }
  const auto scale = metrics::parse_cider_scale(o.scale);

  Report r;
  r.title = "caption scores";
  r.notices = refs.warnings;
  Table t{"scores", {"tokenizer", "images", "bleu1", "bleu4", "rouge_l", "cider"}, {}};
  auto add = [&t](const metrics::ScoreReport& s) {
    t.add_row({s.tokenizer, static_cast<long long>(s.corpus_size), s.bleu1, s.bleu4, s.rouge_l,
               s.cider});
  };
  if (o.all_tokenizers) {
    std::vector<tokenize::Tokenizer> toks;
    for (const auto& n : tokenize::tokenizer_names()) toks.push_back(tokenize::make_tokenizer(n));
    const auto s = metrics::sensitivity_harness(corpus, toks, scale);
    for (const auto& rep : s.reports) add(rep);
    r.summary.emplace_back("delta_bleu1", s.delta_bleu1);
    r.summary.emplace_back("delta_bleu4", s.delta_bleu4);
    r.summary.emplace_back("delta_rouge_l", s.delta_rouge_l);
    r.summary.emplace_back("delta_cider", s.delta_cider);
  } else {
    add(metrics::score(corpus, tokenize::make_tokenizer(o.tokenizer), scale));
  }
  r.summary.emplace_back("cider_scale", o.scale);
  r.tables.push_back(std::move(t));
  return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vietnamese scene-text captioning toolkit", "vnscene"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  Options o;

  app.add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"table", "delimited", "document"}));
  app.add_option("--inventory", o.inventory, "Syllable inventory JSON (default: built in)");
  app.add_option("--stopwords", o.stopwords, "Stopword list, one word per line");
  app.add_option("--config", o.config, "Graph configuration JSON for attention");
  app.add_option("--seed", o.seed, "Seed for stub embeddings and random weights");
  app.add_option("--scale", o.scale, "CIDEr scale")->check(CLI::IsMember({"x1", "x10"}));
  app.add_option("--tokenizer", o.tokenizer, "Tokenizer for score")
      ->check(CLI::IsMember({"space", "character", "syllable"}));
  app.add_flag("--all-tokenizers", o.all_tokenizers, "Score under every tokenizer");
  app.add_flag("--strict", o.strict, "Reject caption count/id violations");

  auto* analyze = app.add_subcommand("analyze", "Per-token orthography and syllable report");
  analyze->add_option("tokens", o.tokens, "Tokens to analyze");
  analyze->add_option("--file", o.token_file, "Whitespace-separated tokens");

  auto* features = app.add_subcommand("features", "Pairwise phonological features");
  features->add_option("tokens", o.tokens, "Tokens");
  features->add_option("--file", o.token_file, "Token list, one per line");

  auto* diagnose = app.add_subcommand("diagnose", "Dataset-level linguistic diagnostics");
  diagnose->add_option("dataset", o.dataset, "Dataset JSON")->required();
  diagnose->add_option("--ocr", o.ocr, "OCR sidecar (JSON lines)");
  diagnose->add_option("--top", o.top, "Collision groups to list")->check(CLI::NonNegativeNumber);

  auto* attention = app.add_subcommand("attention", "Fusion-graph forward pass on an instance");
  attention->add_option("instance", o.instance, "Instance JSON")->required();
  attention->add_flag("--gradcheck", o.gradcheck, "Run the finite-difference gradient check");
  attention->add_flag("--random-weights", o.random_weights,
                      "Use random weights instead of the neutral initialization");

  auto* score = app.add_subcommand("score", "Caption metrics");
  score->add_option("candidates", o.candidates, "image_id<TAB>caption lines")->required();
  score->add_option("references", o.references, "Dataset JSON with reference captions")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    Report r;
    if (analyze->parsed()) {
      r = cmd_analyze(o);
    } else if (features->parsed()) {
      r = cmd_features(o);
    } else if (diagnose->parsed()) {
      r = cmd_diagnose(o);
    } else if (attention->parsed()) {
      r = cmd_attention(o);
    } else {
      r = cmd_score(o);
    }
    emit(r, o, out, err);
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dataset_io::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dataset_io::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dataset_io::DuplicateImageId& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dataset_io::CaptionCountViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitAnalysis;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace vnscene::cli
