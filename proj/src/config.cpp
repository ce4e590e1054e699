#include "sleepd/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sleepd/http_backend.hpp"
#include "sleepd/mock_backend.hpp"
#include "sleepd/store.hpp"

namespace sleepd {

namespace {

using nlohmann::json;

std::string get_string(const json& j, const char* key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string())
    throw Error(Errc::ConfigError,
                std::string("config field must be a string: ") + key);
  return interpolate_env(j[key].get<std::string>());
}

std::optional<Effort> read_effort(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  std::string name = j[key].get<std::string>();
  auto effort = effort_from_name(name);
  if (!effort)
    throw Error(Errc::ConfigError, "unknown effort tier: " + name);
  return effort;
}

Budget read_budget(const json& j) {
  Budget budget;
  budget.verbosity_level = j.value("verbosity", 0);
  if (budget.verbosity_level < 0 || budget.verbosity_level > 4)
    throw Error(Errc::ConfigError,
                "verbosity must be 0..4, got " +
                    std::to_string(budget.verbosity_level));
  budget.effort = read_effort(j, "effort");
  if (j.contains("max_output_tokens") && !j["max_output_tokens"].is_null())
    budget.max_output_tokens = j["max_output_tokens"].get<std::uint32_t>();
  budget.sample_k = j.value("sample_k", std::uint32_t{1});
  if (budget.sample_k < 1)
    throw Error(Errc::ConfigError, "sample_k must be >= 1");
  return budget;
}

RetryPolicy read_retry(const json& j) {
  RetryPolicy policy;
  if (!j.contains("retry")) return policy;
  const json& r = j["retry"];
  policy.max_attempts = r.value("max_attempts", policy.max_attempts);
  policy.base_delay_ms = r.value("base_delay_ms", policy.base_delay_ms);
  policy.max_delay_ms = r.value("max_delay_ms", policy.max_delay_ms);
  if (policy.max_attempts < 1)
    throw Error(Errc::ConfigError, "retry.max_attempts must be >= 1");
  return policy;
}

}  // namespace

const char* condition_kind_name(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::answer: return "answer";
    case ConditionKind::pass_at_k: return "pass_at_k";
    case ConditionKind::context_only: return "context_only";
  }
  return "answer";
}

std::string interpolate_env(const std::string& value) {
  std::string out;
  std::size_t i = 0;
  while (i < value.size()) {
    if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
      std::size_t close = value.find('}', i + 2);
      if (close == std::string::npos)
        throw Error(Errc::ConfigError,
                    "unterminated ${...} in config value: " + value);
      std::string name = value.substr(i + 2, close - i - 2);
      const char* replacement = std::getenv(name.c_str());
      if (!replacement)
        throw Error(Errc::ConfigError,
                    "environment variable not set: " + name);
      out += replacement;
      i = close + 1;
    } else {
      out += value[i];
      ++i;
    }
  }
  return out;
}

ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, origin + ": " + e.what());
  }

  ExperimentConfig config;

  if (j.contains("backend")) {
    const json& b = j["backend"];
    config.backend.kind = get_string(b, "kind", "mock");
    if (config.backend.kind != "mock" && config.backend.kind != "remote")
      throw Error(Errc::ConfigError,
                  "backend.kind must be mock|remote, got " +
                      config.backend.kind);
    config.backend.script_path = get_string(b, "script", "");
    config.backend.base_url = get_string(b, "base_url", "");
    config.backend.api_key = get_string(b, "api_key", "");
    config.backend.model = get_string(b, "model", "mock-model");
    config.backend.temperature = b.value("temperature", 0.0);
    config.backend.retry = read_retry(b);
  }

  if (j.contains("cost")) {
    const json& c = j["cost"];
    config.cost.test_weight_t = c.value("test_weight_t", 10.0);
    config.cost.include_prompt_tokens =
        c.value("include_prompt_tokens", false);
    if (!(config.cost.test_weight_t > 0.0))
      throw Error(Errc::ConfigError, "cost.test_weight_t must be > 0");
  }

  if (j.contains("sleep")) {
    const json& s = j["sleep"];
    config.sleep.max_rethink_calls = s.value("max_rethink_calls", 10);
    config.sleep.parallel_k = s.value("parallel_k", 1);
    config.sleep.effort = read_effort(s, "effort");
    config.sleep.prompt_id = get_string(s, "prompt_id", "default");
    config.sleep.concurrency = s.value("concurrency", 1);
    if (s.contains("max_output_tokens") && !s["max_output_tokens"].is_null())
      config.sleep.max_output_tokens =
          s["max_output_tokens"].get<std::uint32_t>();
    if (config.sleep.max_rethink_calls < 1)
      throw Error(Errc::ConfigError, "sleep.max_rethink_calls must be >= 1");
    if (config.sleep.parallel_k < 1)
      throw Error(Errc::ConfigError, "sleep.parallel_k must be >= 1");
  }

  if (j.contains("answer")) {
    const json& a = j["answer"];
    config.answer.step_cap = a.value("step_cap", 5);
    config.answer.extension_prompt = get_string(a, "extension_prompt", "");
    config.answer.retry = read_retry(a);
    if (config.answer.step_cap < 1)
      throw Error(Errc::ConfigError, "answer.step_cap must be >= 1");
  }
  // Answer-loop retries default to the backend policy when not overridden.
  if (!j.contains("answer") || !j["answer"].contains("retry"))
    config.answer.retry = config.backend.retry;

  if (j.contains("conditions")) {
    if (!j["conditions"].is_array())
      throw Error(Errc::ConfigError, "conditions must be an array");
    for (const json& c : j["conditions"]) {
      Condition condition;
      condition.name = get_string(c, "name", "");
      if (condition.name.empty())
        throw Error(Errc::ConfigError, "every condition needs a name");
      std::string kind = get_string(c, "kind", "answer");
      if (kind == "answer")
        condition.kind = ConditionKind::answer;
      else if (kind == "pass_at_k")
        condition.kind = ConditionKind::pass_at_k;
      else if (kind == "context_only")
        condition.kind = ConditionKind::context_only;
      else
        throw Error(Errc::ConfigError, "unknown condition kind: " + kind);
      condition.selector = get_string(c, "selector", "raw");
      int index = -1;
      if (!selector_from_name(condition.selector, &index))
        throw Error(Errc::ConfigError,
                    "unknown selector: " + condition.selector);
      condition.budget = read_budget(c);
      condition.pool = get_string(c, "pool", "");
      if (condition.kind == ConditionKind::pass_at_k &&
          condition.budget.sample_k < 1)
        throw Error(Errc::ConfigError, "pass_at_k requires sample_k >= 1");
      for (const Condition& existing : config.conditions)
        if (existing.name == condition.name)
          throw Error(Errc::ConfigError,
                      "duplicate condition name: " + condition.name);
      config.conditions.push_back(std::move(condition));
    }
  } else {
    // Default budget ladder: a pure test-time verbosity sweep.
    for (int level = 0; level < 5; ++level) {
      Condition condition;
      condition.name = "baseline-v" + std::to_string(level);
      condition.kind = ConditionKind::answer;
      condition.selector = "raw";
      condition.budget.verbosity_level = level;
      config.conditions.push_back(std::move(condition));
    }
  }

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    config.dataset.path = get_string(d, "path", "");
    config.dataset.format = get_string(d, "format", "stateful");
    if (config.dataset.format != "stateful" &&
        config.dataset.format != "multi_query")
      throw Error(Errc::ConfigError,
                  "dataset.format must be stateful|multi_query");
    if (!config.dataset.path.empty() &&
        !std::filesystem::exists(config.dataset.path))
      throw Error(Errc::ConfigError,
                  "dataset path does not exist: " + config.dataset.path);
  }

  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    config.analysis.bin_count = a.value("bin_count", 5);
    config.analysis.bin_sleep_condition =
        get_string(a, "bin_sleep_condition", "");
    config.analysis.bin_baseline_condition =
        get_string(a, "bin_baseline_condition", "");
    if (config.analysis.bin_count < 1)
      throw Error(Errc::ConfigError, "analysis.bin_count must be >= 1");
  }

  config.store_dir = get_string(j, "store_dir", "store");
  config.output_dir = get_string(j, "output_dir", "out");
  config.seed = j.value("seed", std::uint64_t{0});

  if (config.backend.kind == "mock" && !config.backend.script_path.empty() &&
      !std::filesystem::exists(config.backend.script_path))
    throw Error(Errc::ConfigError,
                "mock script does not exist: " + config.backend.script_path);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == "mock") {
    auto mock = std::make_unique<MockBackend>();
    if (!config.script_path.empty()) mock->load_script_file(config.script_path);
    return mock;
  }
  RemoteBackendConfig remote;
  remote.base_url = config.base_url;
  remote.api_key = config.api_key;
  remote.model = config.model;
  remote.temperature = config.temperature;
  if (remote.base_url.empty()) {
    const char* from_env = std::getenv(kApiBaseEnvVar);
    if (from_env) remote.base_url = from_env;
  }
  if (remote.api_key.empty()) {
    const char* from_env = std::getenv(kApiKeyEnvVar);
    if (from_env) remote.api_key = from_env;
  }
  return std::make_unique<HttpBackend>(std::move(remote));
}

std::string describe_conditions(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "condition matrix (" << config.conditions.size() << " conditions):\n";
  for (const Condition& c : config.conditions) {
    out << "  " << c.name << ": kind=" << condition_kind_name(c.kind)
        << " selector=" << c.selector
        << " verbosity=" << c.budget.verbosity_level;
    if (c.budget.effort) out << " effort=" << effort_name(*c.budget.effort);
    if (c.budget.max_output_tokens)
      out << " max_output_tokens=" << *c.budget.max_output_tokens;
    out << " sample_k=" << c.budget.sample_k << "\n";
  }
  return out.str();
}

}  // namespace sleepd
