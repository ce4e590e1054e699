#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "sleepd/config.hpp"
#include "sleepd/datasets.hpp"
#include "sleepd/evaluation.hpp"
#include "sleepd/harness.hpp"
#include "sleepd/hash.hpp"
#include "sleepd/service.hpp"
#include "sleepd/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SplitInput {
  std::string id;
  std::string problem;
  json answer;
  std::optional<double> predictability_score;
  json meta;
};

int cmd_split(const std::string& input_path, const std::string& output_path,
              const std::string& overrides_path) {
  std::map<std::string, sleepd::SplitOverride> overrides;
  if (!overrides_path.empty()) {
    std::ifstream in(overrides_path);
    if (!in) {
      std::cerr << "cannot open overrides: " << overrides_path << "\n";
      return 1;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      overrides[j.at("id").get<std::string>()] = {
          j.at("context").get<std::string>(),
          j.at("question").get<std::string>()};
    }
  }

  std::ifstream in(input_path);
  if (!in) {
    std::cerr << "cannot open input: " << input_path << "\n";
    return 1;
  }
  std::ofstream out(output_path, std::ios::trunc);
  if (!out) {
    std::cerr << "cannot open output: " << output_path << "\n";
    return 1;
  }

  std::size_t records = 0, overridden = 0, failed = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      std::string id = j.at("id").get<std::string>();
      std::string problem = j.at("problem").get<std::string>();
      std::optional<sleepd::SplitOverride> override_;
      auto it = overrides.find(id);
      if (it != overrides.end()) override_ = it->second;

      sleepd::SplitResult split = sleepd::split_statements(problem, override_);
      if (split.overridden) ++overridden;

      json record;
      record["id"] = id;
      record["context"] = split.context;
      record["question"] = split.question;
      record["answer"] = j.contains("answer") ? j["answer"] : json(nullptr);
      if (j.contains("predictability_score"))
        record["predictability_score"] = j["predictability_score"];
      if (j.contains("meta")) record["meta"] = j["meta"];
      out << record.dump() << "\n";
      ++records;
    } catch (const std::exception& e) {
      ++failed;
      std::string id;
      try {
        id = json::parse(line).value("id", std::string("?"));
      } catch (...) {
        id = "?";
      }
      std::cerr << input_path << ":" << line_no << " (id " << id
                << "): " << e.what() << "\n";
    }
  }
  std::cout << "split: " << records << " records written, " << overridden
            << " overrides applied, " << failed << " failures\n";
  return failed == 0 ? 0 : 1;
}

std::vector<std::string> dataset_contexts(const sleepd::ExperimentConfig& cfg,
                                          const std::string& dataset_path,
                                          const std::string& format) {
  std::string path = dataset_path.empty() ? cfg.dataset.path : dataset_path;
  std::string fmt = dataset_path.empty() ? cfg.dataset.format : format;
  if (path.empty()) return {};
  std::vector<std::string> contexts;
  std::set<std::string> seen;
  if (fmt == "stateful") {
    for (const auto& example : sleepd::load_stateful(path).examples) {
      if (example.context.empty()) continue;
      if (seen.insert(example.context).second)
        contexts.push_back(example.context);
    }
  } else {
    for (const auto& record : sleepd::load_multi_query(path).contexts) {
      if (seen.insert(record.context).second)
        contexts.push_back(record.context);
    }
  }
  return contexts;
}

int cmd_import(const std::string& config_path, const std::string& dataset_path,
               const std::string& format, const std::string& tag) {
  sleepd::ExperimentConfig config = sleepd::load_config(config_path);
  sleepd::ContextStore store(config.store_dir);
  std::vector<std::string> contexts =
      dataset_contexts(config, dataset_path, format);
  std::size_t imported = 0;
  for (const std::string& context : contexts) {
    std::string id = store.put_context(context);
    if (!tag.empty()) store.add_tag(id, tag);
    ++imported;
  }
  std::cout << "import-dataset: " << imported << " contexts in store "
            << config.store_dir << "\n";
  return 0;
}

int cmd_sleep(const std::string& config_path, const std::string& dataset_path,
              const std::string& format,
              const std::vector<std::string>& context_ids, bool all,
              std::optional<int> parallel_k) {
  sleepd::ExperimentConfig config = sleepd::load_config(config_path);
  if (parallel_k) config.sleep.parallel_k = *parallel_k;
  sleepd::ContextStore store(config.store_dir);
  auto backend = sleepd::make_backend(config.backend);

  std::vector<std::string> contexts;
  if (!context_ids.empty() || all) {
    std::vector<std::string> ids =
        all ? store.list_contexts() : context_ids;
    for (const std::string& id : ids)
      contexts.push_back(store.resolve(id, sleepd::Selector::raw));
  } else {
    contexts = dataset_contexts(config, dataset_path, format);
  }
  if (contexts.empty()) {
    std::cerr << "sleep: no contexts selected (use --all, --context-id, or a "
                 "dataset)\n";
    return 1;
  }

  sleepd::SleepBatchSummary summary =
      sleepd::run_sleep_batch(config, *backend, store, contexts);
  std::cout << "sleep: " << summary.contexts << " contexts, "
            << summary.versions_attached << " derived versions attached ("
            << summary.prior_versions << " prior), " << summary.failures
            << " failures\n"
            << "usage: prompt=" << summary.usage.prompt_tokens
            << " completion=" << summary.usage.completion_tokens
            << " reasoning=" << summary.usage.reasoning_tokens << "\n";
  for (const std::string& error : summary.errors)
    std::cerr << "  " << error << "\n";
  return summary.failures == 0 ? 0 : 1;
}

int cmd_eval(const std::string& config_path, std::optional<std::size_t> limit,
             bool dry_run) {
  sleepd::ExperimentConfig config = sleepd::load_config(config_path);
  if (dry_run) {
    std::cout << sleepd::describe_conditions(config);
    return 0;
  }
  sleepd::ContextStore store(config.store_dir);
  auto backend = sleepd::make_backend(config.backend);

  sleepd::EvalRunSummary summary =
      sleepd::run_eval(config, *backend, store, limit);
  std::cout << "eval: " << summary.completed_now << " pairs completed now, "
            << summary.resumed << " resumed, " << summary.total_pairs
            << " total\n";
  if (!summary.complete) {
    std::cout << "eval: incomplete (rerun to resume)\n";
    return 0;
  }
  std::vector<sleepd::ResultRecord> records = sleepd::load_result_records(
      sleepd::records_path(config.output_dir));
  sleepd::emit_eval_reports(config, records, config.output_dir);
  std::cout << "eval: reports written to " << config.output_dir << "\n";
  return 0;
}

int cmd_report(const std::string& config_path, const std::string& records,
               const std::string& swe_path, const std::string& output_dir) {
  fs::create_directories(output_dir);
  if (!swe_path.empty()) {
    std::vector<sleepd::SweRecord> prs = sleepd::load_swe_records(swe_path);
    sleepd::ReportTable table({"pr_id", "precision", "recall", "f1"});
    double f1_sum = 0.0;
    for (const sleepd::SweRecord& pr : prs) {
      sleepd::FileSetScore score =
          sleepd::swe_file_f1(pr.predicted_files, pr.truth_files);
      table.add_row({pr.pr_id, score.precision, score.recall, score.f1});
      f1_sum += score.f1;
    }
    if (!prs.empty())
      table.add_row({std::string("(mean)"), 0.0, 0.0,
                     f1_sum / static_cast<double>(prs.size())});
    sleepd::emit_report(table, sleepd::ReportFormat::csv,
                        (fs::path(output_dir) / "swe_f1.csv").string());
    std::cout << "report: swe_f1.csv written for " << prs.size() << " PRs\n";
    return 0;
  }
  if (config_path.empty() || records.empty()) {
    std::cerr << "report: need --config and --records (or --swe)\n";
    return 1;
  }
  sleepd::ExperimentConfig config = sleepd::load_config(config_path);
  std::vector<sleepd::ResultRecord> loaded =
      sleepd::load_result_records(records);
  sleepd::emit_eval_reports(config, loaded, output_dir);
  std::cout << "report: reports for " << loaded.size() << " records in "
            << output_dir << "\n";
  return 0;
}

int cmd_export(const std::string& config_path, const std::string& output) {
  sleepd::ExperimentConfig config = sleepd::load_config(config_path);
  sleepd::ContextStore store(config.store_dir);
  std::string manifest = store.export_manifest();
  if (output.empty() || output == "-") {
    std::cout << manifest;
  } else {
    std::ofstream out(output, std::ios::trunc);
    out << manifest;
  }
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& host,
              int port) {
  sleepd::ExperimentConfig config = sleepd::load_config(config_path);
  sleepd::ContextStore store(config.store_dir);
  auto backend = sleepd::make_backend(config.backend);
  sleepd::Service service(config, *backend, store);
  std::cout << "serving on " << host << ":" << port << " (store "
            << config.store_dir << ")\n";
  if (!service.listen(host, port)) {
    std::cerr << "serve: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sleepd — offline context pre-computation and budgeted "
               "query answering"};
  app.require_subcommand(1);

  // split
  auto* split = app.add_subcommand(
      "split", "Split problems into (context, question) records");
  std::string split_input, split_output, split_overrides;
  split->add_option("--input", split_input, "problems JSONL")->required();
  split->add_option("--output", split_output, "stateful records JSONL")
      ->required();
  split->add_option("--overrides", split_overrides,
                    "manual override records JSONL");

  // import-dataset
  auto* import = app.add_subcommand("import-dataset",
                                    "Load dataset contexts into the store");
  std::string import_config, import_dataset, import_format = "stateful",
              import_tag;
  import->add_option("--config", import_config, "experiment config")
      ->required();
  import->add_option("--dataset", import_dataset,
                     "dataset path (default: config dataset)");
  import->add_option("--format", import_format, "stateful|multi_query");
  import->add_option("--tag", import_tag, "tag applied to imported contexts");

  // sleep
  auto* sleep_cmd = app.add_subcommand(
      "sleep", "Run offline derivation over selected contexts");
  std::string sleep_config, sleep_dataset, sleep_format = "stateful";
  std::vector<std::string> sleep_ids;
  bool sleep_all = false;
  int sleep_k = 0;
  sleep_cmd->add_option("--config", sleep_config, "experiment config")
      ->required();
  sleep_cmd->add_option("--dataset", sleep_dataset, "dataset of contexts");
  sleep_cmd->add_option("--format", sleep_format, "stateful|multi_query");
  sleep_cmd->add_option("--context-id", sleep_ids,
                        "context id already in the store (repeatable)");
  sleep_cmd->add_flag("--all", sleep_all, "every context in the store");
  sleep_cmd->add_option("--parallel-k", sleep_k,
                        "override sleep.parallel_k from the config");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "Run the condition matrix and emit reports");
  std::string eval_config;
  std::size_t eval_limit = 0;
  bool eval_dry_run = false;
  eval_cmd->add_option("--config", eval_config, "experiment config")
      ->required();
  eval_cmd->add_option("--limit", eval_limit,
                       "stop after this many newly completed pairs");
  eval_cmd->add_flag("--dry-run", eval_dry_run,
                     "print the resolved condition matrix and exit");

  // report
  auto* report_cmd = app.add_subcommand(
      "report", "Recompute reports from records (or score SWE file sets)");
  std::string report_config, report_records, report_swe,
      report_output = "out";
  report_cmd->add_option("--config", report_config, "experiment config");
  report_cmd->add_option("--records", report_records, "records JSONL");
  report_cmd->add_option("--swe", report_swe,
                         "SWE file-set records for the F1 metric");
  report_cmd->add_option("--output", report_output, "output directory");

  // export
  auto* export_cmd =
      app.add_subcommand("export", "Emit the store's archive manifest");
  std::string export_config, export_output = "-";
  export_cmd->add_option("--config", export_config, "experiment config")
      ->required();
  export_cmd->add_option("--output", export_output, "file path or - for stdout");

  // serve
  auto* serve_cmd =
      app.add_subcommand("serve", "Run the long-lived HTTP service");
  std::string serve_config, serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve_cmd->add_option("--config", serve_config, "experiment config")
      ->required();
  serve_cmd->add_option("--host", serve_host, "bind host");
  serve_cmd->add_option("--port", serve_port, "bind port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed())
      return cmd_split(split_input, split_output, split_overrides);
    if (import->parsed())
      return cmd_import(import_config, import_dataset, import_format,
                        import_tag);
    if (sleep_cmd->parsed())
      return cmd_sleep(sleep_config, sleep_dataset, sleep_format, sleep_ids,
                       sleep_all,
                       sleep_k > 0 ? std::optional<int>(sleep_k)
                                   : std::nullopt);
    if (eval_cmd->parsed())
      return cmd_eval(eval_config,
                      eval_limit > 0 ? std::optional<std::size_t>(eval_limit)
                                     : std::nullopt,
                      eval_dry_run);
    if (report_cmd->parsed())
      return cmd_report(report_config, report_records, report_swe,
                        report_output);
    if (export_cmd->parsed()) return cmd_export(export_config, export_output);
    if (serve_cmd->parsed())
      return cmd_serve(serve_config, serve_host, serve_port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
