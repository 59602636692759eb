#pragma once

// Command-line front end. Subcommands:
//
//   analyze    per-token orthography and syllable report
//   features   pairwise phonological feature flags for a token list
//   diagnose   collision, divergence, error-taxonomy, coverage and copy
//              analyses over a dataset (+ optional OCR sidecar)
//   attention  forward pass of the fusion graph on a small instance, with an
//              optional finite-difference gradient check
//   score      BLEU-1/4, ROUGE-L and CIDEr for a candidates file
//
// Exit codes: 0 success, 1 analysis error, 2 usage or I/O error. Data goes
// to `out`, diagnostics to `err`.

#include <iosfwd>
#include <string>
#include <vector>

namespace vnscene::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysis = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vnscene::cli
