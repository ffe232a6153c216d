#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "msso/harness.hpp"

namespace msso {

// Problem file:
//   {"format": "msso-problem", "version": 1, "M": .., "N": .., "P": ..,
//    "d": [[re, im], ...], "systems": [ F_1 rows [[[re, im], ...], ...], ... ]}
// Parse errors name the offending field, or the line for malformed JSON.
MssoProblem problem_from_json(const std::string& text);
std::string problem_to_json(const MssoProblem& p);
MssoProblem read_problem(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// One line per row n (1-based): n, re_1, im_1, ..., re_P, im_P.
std::string solution_to_csv(const SolutionG& g);
SolutionG solution_from_csv(const std::string& text);
/// Extra numeric fields (objective, lambda, ...) are added at top level.
std::string report_to_json(const SolveReport& report,
                           const std::map<std::string, double>& extras = {});
/// 1-based indices, one per line.
std::string profile_to_text(const SparsityProfile& profile);

std::string format_double(double v);
std::string library_version();

inline constexpr const char* kResultsHeader =
    "experiment,algorithm,M,N,P,K,snr_db,lambda,trial,metric_name,metric_value";

/// Aggregate rows carry "mean" in the trial column; unset values are empty.
std::string results_to_csv(const std::vector<ResultRow>& rows);
std::string results_to_json(const std::vector<ResultRow>& rows);
/// Throws Error naming the line on schema violations.
std::vector<ResultRow> results_from_csv(const std::string& text);

// Fixed lambdas for the noisy experiment:
//   {"format": "msso-noisy-lambdas", "version": 1, "N": .., "M": .., "P": ..,
//    "entries": [{"snr_db": .., "K": .., "lambda": .., "score": ..}, ...]}
struct NoisyLambdaTable {
  Index N = 30;
  Index M = 25;
  Index P = 3;
  std::vector<LambdaTuning> entries;

  /// Throws Error when the pair is missing.
  double lookup(double snr_db, Index k) const;
};

NoisyLambdaTable noisy_lambdas_from_json(const std::string& text);
std::string noisy_lambdas_to_json(const NoisyLambdaTable& table);

}  // namespace msso
