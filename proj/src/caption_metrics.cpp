#include "vnscene/caption_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace vnscene::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts ngrams(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                 toks.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1.0;
  }
  return out;
}

void require_nonempty(const TokenizedCorpus& c) {
  if (c.candidates.empty()) throw EmptyCorpus("corpus has no images");
  if (c.candidates.size() != c.references.size()) {
    throw EmptyCorpus("candidate and reference counts differ");
  }
  for (const auto& refs : c.references) {
    if (refs.empty()) throw EmptyCorpus("an image has no references");
  }
}

}  // namespace

TokenizedCorpus tokenize_corpus(const Corpus& corpus, const tokenize::Tokenizer& tokenizer) {
  TokenizedCorpus out;
  for (const auto& c : corpus.candidates) out.candidates.push_back(tokenizer(c));
  for (const auto& refs : corpus.references) {
    auto& r = out.references.emplace_back();
    for (const auto& ref : refs) r.push_back(tokenizer(ref));
  }
  require_nonempty(out);
  return out;
}

double bleu(const TokenizedCorpus& corpus, int max_n) {
  require_nonempty(corpus);
  if (max_n < 1) throw std::invalid_argument("bleu: n must be positive");
  const auto n_max = static_cast<std::size_t>(max_n);
  std::vector<double> matched(n_max, 0.0);
  std::vector<double> total(n_max, 0.0);
  double cand_len = 0.0;
  double ref_len = 0.0;

  for (std::size_t i = 0; i < corpus.candidates.size(); ++i) {
    const auto& cand = corpus.candidates[i];
    const auto& refs = corpus.references[i];
    cand_len += static_cast<double>(cand.size());
    std::size_t best = refs.front().size();
    for (const auto& r : refs) {
      const auto diff = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) {
        best = r.size();
      }
    }
    ref_len += static_cast<double>(best);

    for (std::size_t n = 1; n <= n_max; ++n) {
      const auto cc = ngrams(cand, n);
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, cnt] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : cc) {
        total[n - 1] += cnt;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  double log_sum = 0.0;
  for (std::size_t n = 0; n < n_max; ++n) {
    if (matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / static_cast<double>(n_max));
}

CiderScale parse_cider_scale(std::string_view name) {
  if (name == "x1") return CiderScale::x1;
  if (name == "x10") return CiderScale::x10;
  throw std::invalid_argument("unknown CIDEr scale '" + std::string(name) + "'");
}

std::vector<double> cider_per_image(const TokenizedCorpus& corpus, CiderScale scale) {
  require_nonempty(corpus);
  constexpr std::size_t kMaxN = 4;
  const auto images = corpus.candidates.size();
  const double log_n = std::log(static_cast<double>(images));

  // Document frequency: images whose reference set contains the n-gram.
  std::vector<std::map<std::vector<std::string>, double>> df(kMaxN);
  for (const auto& refs : corpus.references) {
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      std::set<std::vector<std::string>> seen;
      for (const auto& r : refs) {
        for (const auto& [g, cnt] : ngrams(r, n)) seen.insert(g);
      }
      for (const auto& g : seen) df[n - 1][g] += 1.0;
    }
  }

  auto tfidf = [&](const Tokens& toks, std::size_t n) {
    auto counts = ngrams(toks, n);
    for (auto& [g, v] : counts) {
      auto it = df[n - 1].find(g);
      const double d = it == df[n - 1].end() ? 0.0 : it->second;
      v *= log_n - std::log(std::max(1.0, d));
    }
    return counts;
  };
  auto cosine = [](const NgramCounts& a, const NgramCounts& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [g, v] : a) {
      na += v * v;
      auto it = b.find(g);
      if (it != b.end()) dot += v * it->second;
    }
    for (const auto& [g, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };

  const double factor = scale == CiderScale::x10 ? 10.0 : 1.0;
  std::vector<double> out;
  out.reserve(images);
  for (std::size_t i = 0; i < images; ++i) {
    const auto& refs = corpus.references[i];
    double score = 0.0;
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      const auto c = tfidf(corpus.candidates[i], n);
      double sum = 0.0;
      for (const auto& r : refs) sum += cosine(c, tfidf(r, n));
      score += sum / static_cast<double>(refs.size()) / static_cast<double>(kMaxN);
    }
    out.push_back(score * factor);
  }
  return out;
}

double cider(const TokenizedCorpus& corpus, CiderScale scale) {
  const auto per = cider_per_image(corpus, scale);
  double sum = 0.0;
  for (double v : per) sum += v;
  return sum / static_cast<double>(per.size());
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenizedCorpus& corpus, double beta) {
  require_nonempty(corpus);
  const double b2 = beta * beta;
  double sum = 0.0;
  for (std::size_t i = 0; i < corpus.candidates.size(); ++i) {
    const auto& cand = corpus.candidates[i];
    double best = 0.0;
    for (const auto& r : corpus.references[i]) {
      const auto lcs = static_cast<double>(lcs_length(cand, r));
      if (lcs == 0.0) continue;
      const double p = lcs / static_cast<double>(cand.size());
      const double rec = lcs / static_cast<double>(r.size());
      best = std::max(best, (1.0 + b2) * p * rec / (rec + b2 * p));
    }
    sum += best;
  }
  return sum / static_cast<double>(corpus.candidates.size());
}

ScoreReport score(const Corpus& corpus, const tokenize::Tokenizer& tokenizer, CiderScale scale,
                  double beta) {
  const auto tc = tokenize_corpus(corpus, tokenizer);
  ScoreReport r;
  r.tokenizer = tokenizer.name;
  r.corpus_size = tc.candidates.size();
  r.bleu1 = bleu(tc, 1);
  r.bleu4 = bleu(tc, 4);
  r.rouge_l = rouge_l(tc, beta);
  r.cider = cider(tc, scale);
  return r;
}

Sensitivity sensitivity_harness(const Corpus& corpus,
                                const std::vector<tokenize::Tokenizer>& tokenizers,
                                CiderScale scale, double beta) {
  if (tokenizers.size() < 2) {
    throw std::invalid_argument("sensitivity harness needs at least two tokenizers");
  }
  Sensitivity s;
  for (const auto& t : tokenizers) s.reports.push_back(score(corpus, t, scale, beta));
  auto spread = [&s](double ScoreReport::*field) {
    double lo = s.reports.front().*field;
    double hi = lo;
    for (const auto& r : s.reports) {
      lo = std::min(lo, r.*field);
      hi = std::max(hi, r.*field);
    }
    return hi - lo;
  };
  s.delta_bleu1 = spread(&ScoreReport::bleu1);
  s.delta_bleu4 = spread(&ScoreReport::bleu4);
  s.delta_rouge_l = spread(&ScoreReport::rouge_l);
  s.delta_cider = spread(&ScoreReport::cider);
  return s;
}

}  // namespace vnscene::metrics
