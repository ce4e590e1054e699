#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sleepd/backend.hpp"

namespace sleepd {

// Linear cost model: a test-time token costs test_weight_t sleep-time
// tokens. Generated tokens (completion + reasoning) count; prompt tokens are
// excluded unless include_prompt_tokens is set.
struct CostModel {
  double test_weight_t = 10.0;
  bool include_prompt_tokens = false;
};

enum class Phase { sleep, test };

const char* phase_name(Phase phase);

struct LedgerEntry {
  Phase phase = Phase::test;
  std::string context_id;
  std::optional<std::string> example_id;
  Usage usage;
};

// Append-only token ledger; totals are elementwise sums. Appends are
// serialized so concurrent tasks may share one ledger.
class UsageLedger {
 public:
  void append(LedgerEntry entry);
  std::vector<LedgerEntry> entries() const;
  Usage total(Phase phase) const;
  Usage total() const;

 private:
  mutable std::mutex mutex_;
  std::vector<LedgerEntry> entries_;
};

// Billable tokens of one usage record under the model.
std::uint64_t billable_tokens(const Usage& usage, const CostModel& model);

// Sigma(sleep tokens) + t * Sigma(test tokens).
double weighted_cost(const UsageLedger& ledger, const CostModel& model);

// (sleep_total + t * Sigma(test_i)) / N for one context's N queries.
// Errors: ZeroQueries.
double amortized_cost_per_query(const Usage& sleep_total,
                                const std::vector<Usage>& test_per_query,
                                const CostModel& model);

struct EvalRecord {
  std::string example_id;
  std::string context_id;
  std::string condition;
  bool correct = false;
  std::uint64_t test_tokens = 0;  // completion + reasoning of the answer call(s)
};

struct ConditionStats {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::uint64_t token_sum = 0;

  double accuracy() const {
    return n == 0 ? 0.0
                  : static_cast<double>(correct) / static_cast<double>(n);
  }
  double mean_test_tokens() const {
    return n == 0 ? 0.0
                  : static_cast<double>(token_sum) / static_cast<double>(n);
  }
};

// Per-condition accuracy and mean test tokens. Errors: EmptyGroup on an
// empty record list.
std::map<std::string, ConditionStats> accuracy(
    const std::vector<EvalRecord>& records);

struct ParetoPoint {
  double avg_test_tokens = 0.0;
  double accuracy = 0.0;
  std::string condition;
};

// Maximal points under (tokens down, accuracy up) dominance; exact ties on
// both axes keep the lexicographically smallest condition. Sorted by tokens
// ascending, so surviving accuracies strictly increase.
std::vector<ParetoPoint> pareto_frontier(std::vector<ParetoPoint> points);

struct BinStats {
  int bin = 0;
  std::size_t n_sleep = 0;
  std::size_t n_baseline = 0;
  double accuracy_sleep = 0.0;
  double accuracy_baseline = 0.0;
  double gap = 0.0;
};

// Per-bin accuracy of the two conditions and their difference, bins ordered
// least to most predictable. Errors: MissingBin when a record's example has
// no bin assignment.
std::vector<BinStats> bin_report(const std::vector<EvalRecord>& records,
                                 const std::map<std::string, int>& bins,
                                 const std::string& sleep_condition,
                                 const std::string& baseline_condition,
                                 int bin_count);

// Minimal tabular report: fixed column order, full-precision numerics,
// csv (with header) or json_lines emission.
class ReportTable {
 public:
  using Cell = std::variant<std::string, std::int64_t, double, bool>;

  explicit ReportTable(std::vector<std::string> columns);

  void add_row(std::vector<Cell> cells);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t row_count() const { return rows_.size(); }

  std::string to_csv() const;
  std::string to_json_lines() const;

  static ReportTable from_csv(const std::string& text);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

enum class ReportFormat { csv, json_lines };

// Writes the table to path in the chosen format. Errors: IoFailure.
void emit_report(const ReportTable& table, ReportFormat format,
                 const std::string& path);

// Full-precision, locale-independent double formatting (shortest round-trip
// form); shared by every report writer.
std::string format_double(double value);

}  // namespace sleepd
