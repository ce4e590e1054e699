#include "sleepd/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sleepd/evaluation.hpp"
#include "sleepd/hash.hpp"

namespace sleepd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json budget_to_json(const Budget& budget) {
  json j;
  j["verbosity"] = budget.verbosity_level;
  j["effort"] =
      budget.effort ? json(effort_name(*budget.effort)) : json(nullptr);
  j["max_output_tokens"] = budget.max_output_tokens
                               ? json(*budget.max_output_tokens)
                               : json(nullptr);
  j["sample_k"] = budget.sample_k;
  return j;
}

Budget budget_from_json(const json& j) {
  Budget budget;
  budget.verbosity_level = j.value("verbosity", 0);
  if (j.contains("effort") && !j["effort"].is_null())
    budget.effort = effort_from_name(j["effort"].get<std::string>());
  if (j.contains("max_output_tokens") && !j["max_output_tokens"].is_null())
    budget.max_output_tokens = j["max_output_tokens"].get<std::uint32_t>();
  budget.sample_k = j.value("sample_k", std::uint32_t{1});
  return budget;
}

ContextKind selector_kind(const std::string& selector) {
  if (selector == "raw") return ContextKind::raw;
  if (selector == "concat_all") return ContextKind::concat_derived;
  return ContextKind::derived;
}

std::string resolve_context_text(const EvalItem& item,
                                 const std::string& selector,
                                 ContextStore& store) {
  int index = -1;
  auto sel = selector_from_name(selector, &index);
  if (!sel) throw Error(Errc::ConfigError, "unknown selector: " + selector);
  if (*sel == Selector::raw) return item.context;
  std::string id = sha256_hex(item.context);
  return store.resolve(id, *sel, index);
}

}  // namespace

std::vector<EvalItem> eval_items_from_stateful(
    const std::vector<StatefulExample>& examples) {
  std::vector<EvalItem> items;
  items.reserve(examples.size());
  for (const StatefulExample& example : examples) {
    EvalItem item;
    item.example_id = example.id;
    item.context = example.context;
    item.question = example.question;
    item.truth_text = example.answer_text;
    item.truth = example.answer;
    item.aime_format = example.aime_format();
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<EvalItem> eval_items_from_multi_query(
    const std::vector<MultiQueryContext>& contexts) {
  std::vector<EvalItem> items;
  for (const MultiQueryContext& record : contexts) {
    for (std::size_t i = 0; i < record.questions.size(); ++i) {
      const MultiQueryQuestion& q = record.questions[i];
      EvalItem item;
      item.example_id = record.context_id + "#q" + std::to_string(i);
      item.context = record.context;
      item.question = q.question;
      item.truth_text = q.answer_text;
      item.truth = q.answer;
      items.push_back(std::move(item));
    }
  }
  return items;
}

std::string ResultRecord::to_json_line() const {
  json j;
  j["example_id"] = example_id;
  j["context_id"] = context_id;
  j["condition"] = condition;
  j["context_kind"] = context_kind;
  j["budget"] = budget_to_json(budget);
  j["numeric"] = numeric ? json(numeric->to_string()) : json(nullptr);
  j["correct"] = correct;
  j["usage"] = {{"prompt_tokens", usage.prompt_tokens},
                {"completion_tokens", usage.completion_tokens},
                {"reasoning_tokens", usage.reasoning_tokens}};
  j["test_tokens"] = test_tokens;
  if (!error.empty()) j["error"] = error;
  return j.dump();
}

ResultRecord ResultRecord::from_json_line(const std::string& line) {
  json j = json::parse(line);
  ResultRecord record;
  record.example_id = j.at("example_id").get<std::string>();
  record.context_id = j.value("context_id", std::string());
  record.condition = j.at("condition").get<std::string>();
  record.context_kind = j.value("context_kind", std::string("raw"));
  if (j.contains("budget")) record.budget = budget_from_json(j["budget"]);
  if (j.contains("numeric") && !j["numeric"].is_null())
    record.numeric = Rational::parse(j["numeric"].get<std::string>());
  record.correct = j.value("correct", false);
  if (j.contains("usage")) {
    record.usage.prompt_tokens =
        j["usage"].value("prompt_tokens", std::uint64_t{0});
    record.usage.completion_tokens =
        j["usage"].value("completion_tokens", std::uint64_t{0});
    record.usage.reasoning_tokens =
        j["usage"].value("reasoning_tokens", std::uint64_t{0});
  }
  record.test_tokens = j.value("test_tokens", std::uint64_t{0});
  record.error = j.value("error", std::string());
  return record;
}

std::string records_path(const std::string& output_dir) {
  return (fs::path(output_dir) / "records.jsonl").string();
}

std::vector<ResultRecord> load_result_records(const std::string& path) {
  std::vector<ResultRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(ResultRecord::from_json_line(line));
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaViolation,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

namespace {

std::vector<EvalItem> load_items(const ExperimentConfig& config) {
  if (config.dataset.path.empty())
    throw Error(Errc::ConfigError, "config has no dataset.path");
  if (config.dataset.format == "stateful")
    return eval_items_from_stateful(
        load_stateful(config.dataset.path).examples);
  return eval_items_from_multi_query(
      load_multi_query(config.dataset.path).contexts);
}

ResultRecord evaluate_pair(const EvalItem& item, const Condition& condition,
                           const ExperimentConfig& config, Backend& backend,
                           ContextStore& store) {
  ResultRecord record;
  record.example_id = item.example_id;
  record.context_id = item.context.empty() ? "" : sha256_hex(item.context);
  record.condition = condition.name;
  record.budget = condition.budget;

  ContextKind kind = condition.kind == ConditionKind::context_only
                         ? ContextKind::context_only
                         : selector_kind(condition.selector);
  record.context_kind = context_kind_name(kind);

  try {
    std::string context_text =
        resolve_context_text(item, condition.selector, store);
    GradingPolicy policy{item.aime_format};
    if (!item.truth)
      throw Error(Errc::SchemaViolation,
                  "truth is not numeric for " + item.example_id);

    if (condition.kind == ConditionKind::pass_at_k) {
      PassAtKResult result =
          pass_at_k_evaluate(item.question, context_text, kind,
                             condition.budget, *item.truth, backend,
                             config.answer, policy);
      record.correct = result.correct;
      record.usage = result.usage;
    } else if (condition.kind == ConditionKind::context_only) {
      Answer a = context_only_answer(context_text, condition.budget, backend,
                                     config.answer);
      record.numeric = a.numeric;
      record.correct = grade_numeric(a.numeric, *item.truth, policy);
      record.usage = a.usage;
    } else {
      Answer a = answer(item.question, context_text, kind, condition.budget,
                        backend, config.answer);
      record.numeric = a.numeric;
      record.correct = grade_numeric(a.numeric, *item.truth, policy);
      record.usage = a.usage;
    }
    record.test_tokens =
        record.usage.completion_tokens + record.usage.reasoning_tokens;
  } catch (const Error& e) {
    record.correct = false;
    record.error = e.what();
  }
  return record;
}

}  // namespace

EvalRunSummary run_eval(const ExperimentConfig& config, Backend& backend,
                        ContextStore& store,
                        std::optional<std::size_t> limit) {
  if (config.conditions.empty())
    throw Error(Errc::ConfigError, "config has no conditions");
  std::vector<EvalItem> items = load_items(config);

  fs::create_directories(config.output_dir);
  std::string checkpoint = records_path(config.output_dir);

  std::set<std::pair<std::string, std::string>> done;
  for (const ResultRecord& record : load_result_records(checkpoint))
    done.insert({record.condition, record.example_id});

  EvalRunSummary summary;
  summary.total_pairs = items.size() * config.conditions.size();
  // Count resumed pairs against the current matrix so a checkpoint from an
  // older condition set cannot inflate completion.
  for (const Condition& condition : config.conditions)
    for (const EvalItem& item : items)
      if (done.count({condition.name, item.example_id})) ++summary.resumed;

  std::ofstream out(checkpoint, std::ios::app);
  if (!out)
    throw Error(Errc::IoFailure, "cannot open checkpoint: " + checkpoint);

  for (const Condition& condition : config.conditions) {
    for (const EvalItem& item : items) {
      if (done.count({condition.name, item.example_id})) continue;
      if (limit && summary.completed_now >= *limit) {
        summary.complete = false;
        return summary;
      }
      ResultRecord record =
          evaluate_pair(item, condition, config, backend, store);
      out << record.to_json_line() << "\n";
      out.flush();
      ++summary.completed_now;
    }
  }
  summary.complete =
      summary.resumed + summary.completed_now == summary.total_pairs;
  return summary;
}

namespace {

std::uint64_t context_sleep_tokens(ContextStore& store,
                                   const std::string& context_id,
                                   const CostModel& model) {
  if (context_id.empty() || !store.has_context(context_id)) return 0;
  std::uint64_t tokens = 0;
  int count = store.derived_count(context_id);
  for (int i = 0; i < count; ++i) {
    DerivedContext derived = store.read_derived(context_id, i);
    tokens += billable_tokens(derived.provenance.usage, model);
  }
  return tokens;
}

}  // namespace

void emit_eval_reports(const ExperimentConfig& config,
                       const std::vector<ResultRecord>& records,
                       const std::string& output_dir) {
  if (records.empty())
    throw Error(Errc::EmptyGroup, "no records to report on");
  fs::create_directories(output_dir);

  std::vector<ResultRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const ResultRecord& a, const ResultRecord& b) {
              if (a.condition != b.condition) return a.condition < b.condition;
              return a.example_id < b.example_id;
            });

  std::vector<EvalRecord> eval_records;
  eval_records.reserve(sorted.size());
  for (const ResultRecord& record : sorted)
    eval_records.push_back({record.example_id, record.context_id,
                            record.condition, record.correct,
                            record.test_tokens});

  std::map<std::string, ConditionStats> stats = accuracy(eval_records);

  std::map<std::string, std::string> pool_of;  // condition -> pool label
  for (const Condition& condition : config.conditions)
    if (!condition.pool.empty()) pool_of[condition.name] = condition.pool;

  ReportTable accuracy_table(
      {"condition", "pool", "n", "correct", "accuracy", "mean_test_tokens"});
  for (const auto& [condition, s] : stats) {
    auto pooled = pool_of.find(condition);
    accuracy_table.add_row(
        {condition, pooled == pool_of.end() ? std::string() : pooled->second,
         static_cast<std::int64_t>(s.n), static_cast<std::int64_t>(s.correct),
         s.accuracy(), s.mean_test_tokens()});
  }
  emit_report(accuracy_table, ReportFormat::csv,
              (fs::path(output_dir) / "accuracy.csv").string());

  // Replicate runs pooled per label, with per-run accuracy spread retained.
  std::map<std::string, ConditionStats> pooled_stats;
  std::map<std::string, std::pair<double, double>> pooled_spread;
  std::map<std::string, int> pooled_runs;
  for (const auto& [condition, s] : stats) {
    auto it = pool_of.find(condition);
    if (it == pool_of.end()) continue;
    ConditionStats& merged = pooled_stats[it->second];
    merged.n += s.n;
    merged.correct += s.correct;
    merged.token_sum += s.token_sum;
    auto& spread = pooled_spread.emplace(it->second,
                                         std::pair{1.0, 0.0}).first->second;
    spread.first = std::min(spread.first, s.accuracy());
    spread.second = std::max(spread.second, s.accuracy());
    ++pooled_runs[it->second];
  }
  if (!pooled_stats.empty()) {
    ReportTable pooled_table({"pool", "runs", "n", "accuracy",
                              "mean_test_tokens", "accuracy_min",
                              "accuracy_max"});
    for (const auto& [label, s] : pooled_stats)
      pooled_table.add_row({label,
                            static_cast<std::int64_t>(pooled_runs[label]),
                            static_cast<std::int64_t>(s.n), s.accuracy(),
                            s.mean_test_tokens(), pooled_spread[label].first,
                            pooled_spread[label].second});
    emit_report(pooled_table, ReportFormat::csv,
                (fs::path(output_dir) / "pooled.csv").string());
  }

  // Pareto points: pooled conditions appear once per pool, the rest appear
  // individually.
  std::vector<ParetoPoint> points;
  for (const auto& [condition, s] : stats) {
    if (pool_of.count(condition)) continue;
    points.push_back({s.mean_test_tokens(), s.accuracy(), condition});
  }
  for (const auto& [label, s] : pooled_stats)
    points.push_back({s.mean_test_tokens(), s.accuracy(), label});
  std::vector<ParetoPoint> frontier = pareto_frontier(points);
  ReportTable pareto_table({"condition", "avg_test_tokens", "accuracy"});
  for (const ParetoPoint& p : frontier)
    pareto_table.add_row({p.condition, p.avg_test_tokens, p.accuracy});
  emit_report(pareto_table, ReportFormat::csv,
              (fs::path(output_dir) / "pareto.csv").string());

  // Predictability bins: needs a stateful dataset with scores plus the two
  // configured conditions.
  if (!config.analysis.bin_sleep_condition.empty() &&
      !config.analysis.bin_baseline_condition.empty() &&
      config.dataset.format == "stateful" && !config.dataset.path.empty()) {
    StatefulDataset dataset = load_stateful(config.dataset.path);
    bool all_scored = !dataset.examples.empty();
    for (const StatefulExample& example : dataset.examples)
      if (!example.predictability_score) all_scored = false;
    if (all_scored) {
      std::map<std::string, int> bins = assign_predictability_bins(
          dataset.examples, config.analysis.bin_count);
      std::vector<BinStats> report =
          bin_report(eval_records, bins, config.analysis.bin_sleep_condition,
                     config.analysis.bin_baseline_condition,
                     config.analysis.bin_count);
      ReportTable bins_table({"bin", "n_sleep", "accuracy_sleep", "n_baseline",
                              "accuracy_baseline", "gap"});
      for (const BinStats& b : report)
        bins_table.add_row({static_cast<std::int64_t>(b.bin),
                            static_cast<std::int64_t>(b.n_sleep),
                            b.accuracy_sleep,
                            static_cast<std::int64_t>(b.n_baseline),
                            b.accuracy_baseline, b.gap});
      emit_report(bins_table, ReportFormat::csv,
                  (fs::path(output_dir) / "bins.csv").string());
    }
  }

  // Amortization: average cost per query for contexts with several queries.
  if (config.dataset.format == "multi_query" && !config.dataset.path.empty()) {
    ContextStore store(config.store_dir);
    std::map<std::string, std::map<std::string, std::vector<std::uint64_t>>>
        by_condition_context;  // condition -> context_id -> test tokens
    for (const ResultRecord& record : sorted)
      by_condition_context[record.condition][record.context_id].push_back(
          record.test_tokens);

    ReportTable table({"condition", "context_id", "n_queries", "sleep_tokens",
                       "test_tokens", "amortized_cost_per_query"});
    for (const auto& [condition, contexts] : by_condition_context) {
      double cost_sum = 0.0;
      std::int64_t context_count = 0;
      for (const auto& [context_id, tokens] : contexts) {
        std::uint64_t sleep_tokens =
            context_sleep_tokens(store, context_id, config.cost);
        std::uint64_t test_tokens = 0;
        std::vector<Usage> test_usages;
        for (std::uint64_t t : tokens) {
          test_tokens += t;
          Usage usage;
          usage.completion_tokens = t;
          test_usages.push_back(usage);
        }
        Usage sleep_usage;
        sleep_usage.completion_tokens = sleep_tokens;
        double cost =
            amortized_cost_per_query(sleep_usage, test_usages, config.cost);
        cost_sum += cost;
        ++context_count;
        table.add_row({condition, context_id,
                       static_cast<std::int64_t>(tokens.size()),
                       static_cast<std::int64_t>(sleep_tokens),
                       static_cast<std::int64_t>(test_tokens), cost});
      }
      if (context_count > 0)
        table.add_row({condition, std::string("(mean)"), context_count,
                       std::int64_t{0}, std::int64_t{0},
                       cost_sum / static_cast<double>(context_count)});
    }
    emit_report(table, ReportFormat::csv,
                (fs::path(output_dir) / "amortization.csv").string());
  }
}

SleepBatchSummary run_sleep_batch(const ExperimentConfig& config,
                                  Backend& backend, ContextStore& store,
                                  const std::vector<std::string>& contexts) {
  SleepBatchSummary summary;
  for (const std::string& context : contexts) {
    ++summary.contexts;
    try {
      std::string id = store.put_context(context);
      summary.prior_versions +=
          static_cast<std::size_t>(store.derived_count(id));
      std::vector<SleepRunOutcome> outcomes = run_sleep_parallel(
          context, config.sleep, backend, config.backend.retry);
      for (const SleepRunOutcome& outcome : outcomes) {
        if (outcome.ok()) {
          store.attach_derived(id, *outcome.derived);
          ++summary.versions_attached;
          summary.usage += outcome.derived->provenance.usage;
        } else {
          ++summary.failures;
          summary.errors.push_back(id.substr(0, 12) + "[" +
                                   std::to_string(outcome.parallel_index) +
                                   "]: " + outcome.error);
        }
      }
    } catch (const Error& e) {
      ++summary.failures;
      summary.errors.push_back(e.what());
    }
  }
  return summary;
}

}  // namespace sleepd
