#include "sleepd/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sleepd/errors.hpp"

namespace sleepd {

const char* phase_name(Phase phase) {
  return phase == Phase::sleep ? "sleep" : "test";
}

void UsageLedger::append(LedgerEntry entry) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::vector<LedgerEntry> UsageLedger::entries() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_;
}

Usage UsageLedger::total(Phase phase) const {
  std::lock_guard<std::mutex> lock(mutex_);
  Usage total;
  for (const LedgerEntry& entry : entries_)
    if (entry.phase == phase) total += entry.usage;
  return total;
}

Usage UsageLedger::total() const {
  std::lock_guard<std::mutex> lock(mutex_);
  Usage total;
  for (const LedgerEntry& entry : entries_) total += entry.usage;
  return total;
}

std::uint64_t billable_tokens(const Usage& usage, const CostModel& model) {
  std::uint64_t tokens = usage.completion_tokens + usage.reasoning_tokens;
  if (model.include_prompt_tokens) tokens += usage.prompt_tokens;
  return tokens;
}

double weighted_cost(const UsageLedger& ledger, const CostModel& model) {
  std::uint64_t sleep_tokens = 0;
  std::uint64_t test_tokens = 0;
  for (const LedgerEntry& entry : ledger.entries()) {
    if (entry.phase == Phase::sleep)
      sleep_tokens += billable_tokens(entry.usage, model);
    else
      test_tokens += billable_tokens(entry.usage, model);
  }
  return static_cast<double>(sleep_tokens) +
         model.test_weight_t * static_cast<double>(test_tokens);
}

double amortized_cost_per_query(const Usage& sleep_total,
                                const std::vector<Usage>& test_per_query,
                                const CostModel& model) {
  if (test_per_query.empty())
    throw Error(Errc::ZeroQueries, "amortization requires at least one query");
  std::uint64_t test_tokens = 0;
  for (const Usage& usage : test_per_query)
    test_tokens += billable_tokens(usage, model);
  double numerator =
      static_cast<double>(billable_tokens(sleep_total, model)) +
      model.test_weight_t * static_cast<double>(test_tokens);
  return numerator / static_cast<double>(test_per_query.size());
}

std::map<std::string, ConditionStats> accuracy(
    const std::vector<EvalRecord>& records) {
  if (records.empty())
    throw Error(Errc::EmptyGroup, "no records to aggregate");
  std::map<std::string, ConditionStats> out;
  for (const EvalRecord& record : records) {
    ConditionStats& stats = out[record.condition];
    ++stats.n;
    if (record.correct) ++stats.correct;
    stats.token_sum += record.test_tokens;
  }
  return out;
}

std::vector<ParetoPoint> pareto_frontier(std::vector<ParetoPoint> points) {
  if (points.empty()) return {};
  // Exact duplicates on both axes collapse to the smallest condition label.
  std::sort(points.begin(), points.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              if (a.avg_test_tokens != b.avg_test_tokens)
                return a.avg_test_tokens < b.avg_test_tokens;
              if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
              return a.condition < b.condition;
            });
  std::vector<ParetoPoint> deduped;
  for (const ParetoPoint& p : points) {
    if (!deduped.empty() &&
        deduped.back().avg_test_tokens == p.avg_test_tokens &&
        deduped.back().accuracy == p.accuracy)
      continue;
    deduped.push_back(p);
  }

  // Sorted by tokens ascending / accuracy descending: a point survives iff
  // its accuracy strictly exceeds everything seen before it.
  std::vector<ParetoPoint> frontier;
  double best_accuracy = -1.0;
  for (const ParetoPoint& p : deduped) {
    if (p.accuracy > best_accuracy) {
      frontier.push_back(p);
      best_accuracy = p.accuracy;
    }
  }
  return frontier;
}

std::vector<BinStats> bin_report(const std::vector<EvalRecord>& records,
                                 const std::map<std::string, int>& bins,
                                 const std::string& sleep_condition,
                                 const std::string& baseline_condition,
                                 int bin_count) {
  std::vector<BinStats> out(static_cast<std::size_t>(bin_count));
  for (int b = 0; b < bin_count; ++b) out[static_cast<std::size_t>(b)].bin = b;

  std::vector<std::size_t> correct_sleep(static_cast<std::size_t>(bin_count));
  std::vector<std::size_t> correct_base(static_cast<std::size_t>(bin_count));
  for (const EvalRecord& record : records) {
    if (record.condition != sleep_condition &&
        record.condition != baseline_condition)
      continue;
    auto it = bins.find(record.example_id);
    if (it == bins.end())
      throw Error(Errc::MissingBin,
                  "no bin assignment for example " + record.example_id);
    if (it->second < 0 || it->second >= bin_count)
      throw Error(Errc::MissingBin,
                  "bin out of range for example " + record.example_id);
    std::size_t b = static_cast<std::size_t>(it->second);
    if (record.condition == sleep_condition) {
      ++out[b].n_sleep;
      if (record.correct) ++correct_sleep[b];
    } else {
      ++out[b].n_baseline;
      if (record.correct) ++correct_base[b];
    }
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    BinStats& stats = out[b];
    stats.accuracy_sleep =
        stats.n_sleep == 0 ? 0.0
                           : static_cast<double>(correct_sleep[b]) /
                                 static_cast<double>(stats.n_sleep);
    stats.accuracy_baseline =
        stats.n_baseline == 0 ? 0.0
                              : static_cast<double>(correct_base[b]) /
                                    static_cast<double>(stats.n_baseline);
    stats.gap = stats.accuracy_sleep - stats.accuracy_baseline;
  }
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{})
    throw Error(Errc::IoFailure, "double formatting failed");
  return std::string(buffer, ptr);
}

ReportTable::ReportTable(std::vector<std::string> columns)
    : columns_(std::move(columns)) {}

void ReportTable::add_row(std::vector<Cell> cells) {
  if (cells.size() != columns_.size())
    throw Error(Errc::IoFailure, "row width does not match column count");
  rows_.push_back(std::move(cells));
}

namespace {

std::string cell_to_string(const ReportTable::Cell& cell) {
  if (std::holds_alternative<std::string>(cell))
    return std::get<std::string>(cell);
  if (std::holds_alternative<std::int64_t>(cell))
    return std::to_string(std::get<std::int64_t>(cell));
  if (std::holds_alternative<double>(cell))
    return format_double(std::get<double>(cell));
  return std::get<bool>(cell) ? "true" : "false";
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

nlohmann::json cell_to_json(const ReportTable::Cell& cell) {
  if (std::holds_alternative<std::string>(cell))
    return std::get<std::string>(cell);
  if (std::holds_alternative<std::int64_t>(cell))
    return std::get<std::int64_t>(cell);
  if (std::holds_alternative<double>(cell)) return std::get<double>(cell);
  return std::get<bool>(cell);
}

}  // namespace

std::string ReportTable::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out << ",";
    out << csv_escape(columns_[i]);
  }
  out << "\n";
  for (const std::vector<Cell>& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << csv_escape(cell_to_string(row[i]));
    }
    out << "\n";
  }
  return out.str();
}

std::string ReportTable::to_json_lines() const {
  std::ostringstream out;
  for (const std::vector<Cell>& row : rows_) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < columns_.size(); ++i)
      j[columns_[i]] = cell_to_json(row[i]);
    out << j.dump() << "\n";
  }
  return out.str();
}

ReportTable ReportTable::from_csv(const std::string& text) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
    } else if (c == '\n') {
      row.push_back(field);
      field.clear();
      grid.push_back(row);
      row.clear();
    } else {
      field += c;
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(field);
    grid.push_back(row);
  }
  if (grid.empty()) throw Error(Errc::IoFailure, "csv without a header row");

  ReportTable table(grid.front());
  for (std::size_t r = 1; r < grid.size(); ++r) {
    std::vector<Cell> cells;
    cells.reserve(grid[r].size());
    for (const std::string& value : grid[r]) cells.emplace_back(value);
    table.add_row(std::move(cells));
  }
  return table;
}

void emit_report(const ReportTable& table, ReportFormat format,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write report: " + path);
  out << (format == ReportFormat::csv ? table.to_csv()
                                      : table.to_json_lines());
  if (!out.flush())
    throw Error(Errc::IoFailure, "report write failed: " + path);
}

}  // namespace sleepd
