#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sleepd/backend.hpp"
#include "sleepd/rational.hpp"

namespace sleepd {

struct StatefulExample {
  std::string id;
  std::string context;  // may be empty for single-statement problems
  std::string question;
  std::string answer_text;
  std::optional<Rational> answer;  // parsed when the answer is numeric
  std::optional<double> predictability_score;  // log-prob, higher = more predictable
  std::map<std::string, std::string> meta;

  bool aime_format() const;
};

enum class QuestionOrigin { original, generated };

struct MultiQueryQuestion {
  std::string question;
  std::string answer_text;
  std::optional<Rational> answer;
  QuestionOrigin origin = QuestionOrigin::original;
};

struct MultiQueryContext {
  std::string context_id;
  std::string context;
  std::vector<MultiQueryQuestion> questions;
};

struct SplitResult {
  std::string context;
  std::string question;
  bool overridden = false;
};

struct SplitOverride {
  std::string context;
  std::string question;
};

// Splits a problem into (context, question): statements are maximal spans
// ending in sentence-final punctuation, the question is the final statement
// and the context everything before it (empty for single-statement
// problems). Guards keep decimals and common abbreviations intact. An
// override bypasses splitting entirely.
//
// Errors: NoStatement when the text has no sentence-final punctuation and no
// override is given.
SplitResult split_statements(const std::string& problem,
                             const std::optional<SplitOverride>& override_ =
                                 std::nullopt);

// Statement spans of the text, in order (used by split_statements and the
// round-trip property tests).
std::vector<std::string> statement_spans(const std::string& problem);

enum class DatasetFormat { stateful, multi_query };

struct LoadReport {
  std::size_t contexts = 0;
  std::size_t questions = 0;
};

struct StatefulDataset {
  std::vector<StatefulExample> examples;
  LoadReport report;
};

struct MultiQueryDataset {
  std::vector<MultiQueryContext> contexts;
  LoadReport report;
};

// Line-delimited record loaders. Schema errors name the offending line.
StatefulDataset load_stateful(const std::string& path);
MultiQueryDataset load_multi_query(const std::string& path);
LoadReport load_report(const std::string& path, DatasetFormat format);

struct GeneratedPair {
  std::string question;
  std::string answer_text;
  std::optional<Rational> answer;
};

struct GenerationResult {
  std::vector<GeneratedPair> pairs;
  int dropped = 0;  // malformed or duplicate blocks, counted as warnings
};

// Asks the backend for additional question/answer pairs about the context
// (the paired answer value sits after the "####" marker). Pairs whose answer
// block lacks the marker are dropped with a warning count; duplicates of
// existing questions are dropped likewise. n is a count hint in the prompt;
// the returned list may be shorter.
//
// Errors: BackendFailure; ParseFailure when zero pairs are recovered.
GenerationResult generate_multi_queries(
    const std::string& context, const std::string& example_question,
    const std::string& example_answer, int n, Backend& backend,
    const std::vector<std::string>& existing_questions = {},
    const RetryPolicy& retry = {});

// Parses the marker-delimited generation transcript (exposed for tests).
GenerationResult parse_generated_pairs(
    const std::string& transcript,
    const std::vector<std::string>& existing_questions = {});

struct ScoredId {
  std::string id;
  double score = 0.0;
};

// Quantile bins by score rank: sizes differ by at most one, ties broken by
// id, bin 0 holds the least predictable examples. Errors: MissingScore via
// the example-based overload.
std::map<std::string, int> assign_predictability_bins(
    std::vector<ScoredId> scored, int bins = 5);
std::map<std::string, int> assign_predictability_bins(
    const std::vector<StatefulExample>& examples, int bins = 5);

struct FileSetScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Set-overlap score between predicted and ground-truth modified files.
// Errors: EmptyTruth.
FileSetScore swe_file_f1(const std::set<std::string>& predicted,
                         const std::set<std::string>& truth);

struct SweRecord {
  std::string pr_id;
  std::set<std::string> predicted_files;
  std::set<std::string> truth_files;
};

std::vector<SweRecord> load_swe_records(const std::string& path);

}  // namespace sleepd
