#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sleepd/config.hpp"
#include "sleepd/datasets.hpp"
#include "sleepd/store.hpp"

namespace sleepd {

// One answering unit of the eval matrix: a question asked against a context.
struct EvalItem {
  std::string example_id;
  std::string context;  // raw context text (may be empty)
  std::string question;
  std::string truth_text;
  std::optional<Rational> truth;
  bool aime_format = false;
};

std::vector<EvalItem> eval_items_from_stateful(
    const std::vector<StatefulExample>& examples);
std::vector<EvalItem> eval_items_from_multi_query(
    const std::vector<MultiQueryContext>& contexts);

// Serialized per-pair result line; records double as the resume checkpoint.
struct ResultRecord {
  std::string example_id;
  std::string context_id;
  std::string condition;
  std::string context_kind;
  Budget budget;
  std::optional<Rational> numeric;
  bool correct = false;
  Usage usage;
  std::uint64_t test_tokens = 0;
  std::string error;  // nonempty when the pair failed

  std::string to_json_line() const;
  static ResultRecord from_json_line(const std::string& line);
};

struct EvalRunSummary {
  std::size_t total_pairs = 0;
  std::size_t completed_now = 0;
  std::size_t resumed = 0;
  bool complete = false;
};

// Runs the condition matrix over the configured dataset with checkpointed
// resume: completed (condition, example) pairs are skipped on rerun. A limit
// stops after that many newly completed pairs (used to exercise resume).
EvalRunSummary run_eval(const ExperimentConfig& config, Backend& backend,
                        ContextStore& store,
                        std::optional<std::size_t> limit = std::nullopt);

std::vector<ResultRecord> load_result_records(const std::string& path);

// Report emission from a record set: accuracy.csv, pareto.csv, and — when
// inputs allow — bins.csv and amortization.csv. Aggregation sorts records,
// so report bytes do not depend on completion order.
void emit_eval_reports(const ExperimentConfig& config,
                       const std::vector<ResultRecord>& records,
                       const std::string& output_dir);

// Sleep over every context of the configured dataset (or an explicit list),
// attaching parallel_k derived versions each.
struct SleepBatchSummary {
  std::size_t contexts = 0;
  std::size_t prior_versions = 0;  // derived versions already in the store
  std::size_t versions_attached = 0;
  std::size_t failures = 0;
  Usage usage;
  std::vector<std::string> errors;
};

SleepBatchSummary run_sleep_batch(const ExperimentConfig& config,
                                  Backend& backend, ContextStore& store,
                                  const std::vector<std::string>& contexts);

std::string records_path(const std::string& output_dir);

}  // namespace sleepd
