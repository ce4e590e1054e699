#include "sleepd/service.hpp"

#include <httplib.h>

#include <json.hpp>

#include "sleepd/hash.hpp"
#include "sleepd/prompts.hpp"

namespace sleepd {

namespace {

using nlohmann::json;

json usage_json(const Usage& usage) {
  return {{"prompt_tokens", usage.prompt_tokens},
          {"completion_tokens", usage.completion_tokens},
          {"reasoning_tokens", usage.reasoning_tokens}};
}

void reply_error(httplib::Response& res, int status,
                 const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

// RAII guard for the per-context sleep single-flight set.
class SleepFlight {
 public:
  SleepFlight(std::mutex& mutex, std::set<std::string>& sleeping,
              const std::string& id)
      : mutex_(mutex), sleeping_(sleeping), id_(id) {
    std::lock_guard<std::mutex> lock(mutex_);
    acquired_ = sleeping_.insert(id_).second;
  }
  ~SleepFlight() {
    if (acquired_) {
      std::lock_guard<std::mutex> lock(mutex_);
      sleeping_.erase(id_);
    }
  }
  bool acquired() const { return acquired_; }

 private:
  std::mutex& mutex_;
  std::set<std::string>& sleeping_;
  std::string id_;
  bool acquired_ = false;
};

}  // namespace

Service::Service(ExperimentConfig config, Backend& backend,
                 ContextStore& store)
    : config_(std::move(config)),
      backend_(backend),
      store_(store),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
  server_->Post("/contexts", [this](const httplib::Request& req,
                                    httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return reply_error(res, 422, "body must be JSON");
    }
    if (!body.contains("raw") || !body["raw"].is_string() ||
        body["raw"].get<std::string>().empty())
      return reply_error(res, 422, "field \"raw\" must be a nonempty string");
    try {
      std::string id = store_.put_context(body["raw"].get<std::string>());
      res.set_content(json{{"context_id", id}}.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, 500, e.what());
    }
  });

  server_->Post(R"(/contexts/([0-9a-f]{64})/sleep)",
                [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    if (!store_.has_context(id))
      return reply_error(res, 404, "unknown context: " + id);

    SleepConfig sleep_config = config_.sleep;
    if (!req.body.empty()) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        return reply_error(res, 422, "body must be JSON");
      }
      if (!body.is_object())
        return reply_error(res, 422, "body must be a JSON object");
      sleep_config.max_rethink_calls =
          body.value("max_rethink_calls", sleep_config.max_rethink_calls);
      sleep_config.parallel_k =
          body.value("parallel_k", sleep_config.parallel_k);
      if (body.contains("prompt_id") && body["prompt_id"].is_string())
        sleep_config.prompt_id = body["prompt_id"].get<std::string>();
      if (body.contains("effort") && body["effort"].is_string()) {
        auto effort = effort_from_name(body["effort"].get<std::string>());
        if (!effort) return reply_error(res, 422, "unknown effort tier");
        sleep_config.effort = effort;
      }
      if (body.contains("max_output_tokens") &&
          body["max_output_tokens"].is_number_unsigned())
        sleep_config.max_output_tokens =
            body["max_output_tokens"].get<std::uint32_t>();
      if (sleep_config.max_rethink_calls < 1 || sleep_config.parallel_k < 1)
        return reply_error(res, 422, "invalid sleep parameters");
    }

    SleepFlight flight(sleeping_mutex_, sleeping_, id);
    if (!flight.acquired())
      return reply_error(res, 409,
                         "a sleep run is already in flight for " + id);

    try {
      std::string raw = store_.resolve(id, Selector::raw);
      std::vector<SleepRunOutcome> outcomes = run_sleep_parallel(
          raw, sleep_config, backend_, config_.backend.retry);
      json versions = json::array();
      Usage usage;
      int last_version = -1;
      for (const SleepRunOutcome& outcome : outcomes) {
        if (!outcome.ok())
          return reply_error(res, 502, "sleep run failed: " + outcome.error);
        last_version = store_.attach_derived(id, *outcome.derived);
        versions.push_back(last_version);
        usage += outcome.derived->provenance.usage;
      }
      json out;
      out["version"] = last_version;
      out["versions"] = versions;
      out["usage"] = usage_json(usage);
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      if (e.code() == Errc::BackendFailure)
        reply_error(res, 502, e.what());
      else
        reply_error(res, 500, e.what());
    }
  });

  server_->Post(R"(/contexts/([0-9a-f]{64})/query)",
                [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    if (!store_.has_context(id))
      return reply_error(res, 404, "unknown context: " + id);

    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return reply_error(res, 422, "body must be JSON");
    }
    if (!body.contains("question") || !body["question"].is_string() ||
        body["question"].get<std::string>().empty())
      return reply_error(res, 422,
                         "field \"question\" must be a nonempty string");

    std::string selector = body.value("selector", std::string("raw"));
    int index = -1;
    auto sel = selector_from_name(selector, &index);
    if (!sel) return reply_error(res, 422, "unknown selector: " + selector);

    Budget budget;
    if (body.contains("budget")) {
      const json& b = body["budget"];
      budget.verbosity_level = b.value("verbosity", 0);
      if (budget.verbosity_level < 0 ||
          budget.verbosity_level >= prompts::kVerbosityLevels)
        return reply_error(res, 422, "verbosity must be 0..4");
      if (b.contains("effort") && b["effort"].is_string()) {
        auto effort = effort_from_name(b["effort"].get<std::string>());
        if (!effort) return reply_error(res, 422, "unknown effort tier");
        budget.effort = effort;
      }
      if (b.contains("max_output_tokens") && !b["max_output_tokens"].is_null())
        budget.max_output_tokens = b["max_output_tokens"].get<std::uint32_t>();
      budget.sample_k = b.value("sample_k", std::uint32_t{1});
    }

    try {
      std::string context_text = store_.resolve(id, *sel, index);
      ContextKind kind = *sel == Selector::raw ? ContextKind::raw
                         : *sel == Selector::concat_all
                             ? ContextKind::concat_derived
                             : ContextKind::derived;
      Answer a = answer(body["question"].get<std::string>(), context_text,
                        kind, budget, backend_, config_.answer);
      json out;
      out["answer"] = a.raw_text;
      out["numeric"] = a.numeric ? json(a.numeric->to_string()) : json(nullptr);
      out["context_kind"] = context_kind_name(a.context_kind);
      out["usage"] = usage_json(a.usage);
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::NoDerived:
        case Errc::IndexOutOfRange:
          return reply_error(res, 422, e.what());
        case Errc::BackendFailure:
        case Errc::NoAnswer:
          return reply_error(res, 502, e.what());
        default:
          return reply_error(res, 500, e.what());
      }
    }
  });

  server_->Get(R"(/contexts/([0-9a-f]{64}))",
               [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    if (!store_.has_context(id))
      return reply_error(res, 404, "unknown context: " + id);
    ContextSummary summary = store_.summary(id);
    json out;
    out["context_id"] = summary.context_id;
    out["raw_chars"] = summary.raw_chars;
    out["derived_count"] = summary.derived_count;
    out["tags"] = summary.tags;
    res.set_content(out.dump(), "application/json");
  });
}

bool Service::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int Service::bind_any(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool Service::listen_after_bind() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

bool Service::is_running() const { return server_ && server_->is_running(); }

}  // namespace sleepd
