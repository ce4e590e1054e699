#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sleepd/backend.hpp"
#include "sleepd/evaluation.hpp"
#include "sleepd/sleep.hpp"
#include "sleepd/test_time.hpp"

namespace sleepd {

inline constexpr const char* kApiKeyEnvVar = "SLEEPD_API_KEY";
inline constexpr const char* kApiBaseEnvVar = "SLEEPD_API_BASE";

struct BackendConfig {
  std::string kind = "mock";  // mock | remote
  std::string script_path;    // mock script, optional
  std::string base_url;       // remote; defaults from SLEEPD_API_BASE
  std::string api_key;        // remote; defaults from SLEEPD_API_KEY
  std::string model = "mock-model";
  double temperature = 0.0;
  RetryPolicy retry;
};

enum class ConditionKind { answer, pass_at_k, context_only };

const char* condition_kind_name(ConditionKind kind);

// One column of the experiment matrix: how to answer and against which
// resolved context. Conditions sharing a pool label are replicate runs;
// reports pool their records and keep per-run accuracy for dispersion.
struct Condition {
  std::string name;
  ConditionKind kind = ConditionKind::answer;
  std::string selector = "raw";  // raw | latest_derived | derived:<i> | concat_all
  Budget budget;
  std::string pool;
};

struct DatasetConfig {
  std::string path;
  std::string format = "stateful";  // stateful | multi_query
};

struct AnalysisConfig {
  int bin_count = 5;
  std::string bin_sleep_condition;
  std::string bin_baseline_condition;
};

struct ExperimentConfig {
  BackendConfig backend;
  CostModel cost;
  SleepConfig sleep;
  AnswerOptions answer;
  std::vector<Condition> conditions;
  DatasetConfig dataset;
  AnalysisConfig analysis;
  std::string store_dir = "store";
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

// Loads a JSON config document. String values may interpolate environment
// variables with ${NAME}; an unset variable is a ConfigError. Validation
// checks t > 0, verbosity ranges, selector syntax, and that referenced
// input paths exist.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& origin);

// ${VAR} interpolation used by the loader; exposed for tests.
std::string interpolate_env(const std::string& value);

// Builds the configured backend (MockBackend, optionally pre-loaded with a
// script file, or HttpBackend).
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

// Human-readable condition matrix for --dry-run.
std::string describe_conditions(const ExperimentConfig& config);

}  // namespace sleepd
