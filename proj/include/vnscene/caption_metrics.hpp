#pragma once

// Corpus-level caption metrics (BLEU-n, CIDEr, ROUGE-L) over a pluggable
// tokenizer, and a harness that scores one corpus under several tokenizers.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnscene/tokenizer.hpp"

namespace vnscene::metrics {

class EmptyCorpus : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using tokenize::Tokens;

// One candidate and its reference set per image.
struct Corpus {
  std::vector<std::string> candidates;
  std::vector<std::vector<std::string>> references;
};

struct TokenizedCorpus {
  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
};

// Throws EmptyCorpus for an empty corpus, mismatched sizes or an image
// without references.
TokenizedCorpus tokenize_corpus(const Corpus& corpus, const tokenize::Tokenizer& tokenizer);

// Smoothing-off corpus BLEU with clipped counts and a brevity penalty
// against the closest reference length (the shorter one on ties).
double bleu(const TokenizedCorpus& corpus, int max_n);

enum class CiderScale { x1, x10 };
CiderScale parse_cider_scale(std::string_view name);

// TF-IDF cosine CIDEr with IDF taken from the references being scored,
// n = 1..4 weighted equally.
double cider(const TokenizedCorpus& corpus, CiderScale scale = CiderScale::x10);
// Per-image contributions before averaging (same scale).
std::vector<double> cider_per_image(const TokenizedCorpus& corpus,
                                    CiderScale scale = CiderScale::x10);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
// Per image, the best LCS F-measure over references; averaged over images.
double rouge_l(const TokenizedCorpus& corpus, double beta = 1.2);

struct ScoreReport {
  std::string tokenizer;
  std::size_t corpus_size = 0;
  double bleu1 = 0.0;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

ScoreReport score(const Corpus& corpus, const tokenize::Tokenizer& tokenizer,
                  CiderScale scale = CiderScale::x10, double beta = 1.2);

struct Sensitivity {
  std::vector<ScoreReport> reports;
  // Largest absolute difference between any two tokenizers.
  double delta_bleu1 = 0.0;
  double delta_bleu4 = 0.0;
  double delta_rouge_l = 0.0;
  double delta_cider = 0.0;
};

// Throws std::invalid_argument with fewer than two tokenizers.
Sensitivity sensitivity_harness(const Corpus& corpus,
                                const std::vector<tokenize::Tokenizer>& tokenizers,
                                CiderScale scale = CiderScale::x10, double beta = 1.2);

}  // namespace vnscene::metrics
