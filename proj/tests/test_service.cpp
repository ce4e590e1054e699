#include <doctest.h>

#include <httplib.h>
#include <unistd.h>

#include <filesystem>
#include <thread>

#include <json.hpp>

#include "sleepd/hash.hpp"
#include "sleepd/mock_backend.hpp"
#include "sleepd/service.hpp"

using namespace sleepd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Scripted = MockBackend::ScriptedOutput;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sleepd-svc-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// Serves on an ephemeral port for the lifetime of the fixture.
struct RunningService {
  Service service;
  int port;
  std::thread thread;

  RunningService(ExperimentConfig config, Backend& backend,
                 ContextStore& store)
      : service(std::move(config), backend, store),
        port(service.bind_any("127.0.0.1")),
        thread([this] { service.listen_after_bind(); }) {
    for (int i = 0; i < 100 && !service.is_running(); ++i)
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~RunningService() {
    service.stop();
    thread.join();
  }
};

Scripted rethink(const std::string& value) {
  json args{{"new_memory", value},
            {"target_block_label", "rethink_memory_block"}};
  return Scripted::make_tool_call("rethink_memory", args.dump());
}

Scripted finish() { return Scripted::make_tool_call("finish_rethinking", "{}"); }

Scripted send(const std::string& message) {
  json args{{"message", message}};
  return Scripted::make_tool_call("send_message", args.dump());
}

}  // namespace

TEST_CASE("service end-to-end: put, sleep, query with substitution") {
  TempDir dir;
  ContextStore store(dir.path / "store");
  MockBackend mock;
  const std::string raw_context =
      "RAW_SECRET: the warehouse holds 64 crates.";
  mock.script({MockBackend::Matcher::Scope::any_message, "RAW_SECRET"},
              {rethink("DERIVED: crate count is 64."), finish()});
  mock.script({MockBackend::Matcher::Scope::last_message, "how many crates"},
              {send("The answer is 64")});

  ExperimentConfig config;
  RunningService running(config, mock, store);
  httplib::Client client("127.0.0.1", running.port);

  // POST /contexts
  auto created = client.Post("/contexts", json{{"raw", raw_context}}.dump(),
                             "application/json");
  REQUIRE(created);
  REQUIRE(created->status == 200);
  std::string id = json::parse(created->body).at("context_id");
  CHECK(id == sha256_hex(raw_context));

  // GET metadata
  auto meta = client.Get(("/contexts/" + id).c_str());
  REQUIRE(meta);
  CHECK(meta->status == 200);
  CHECK(json::parse(meta->body).at("derived_count") == 0);

  // POST sleep
  auto slept = client.Post(("/contexts/" + id + "/sleep").c_str(),
                           json::object().dump(), "application/json");
  REQUIRE(slept);
  REQUIRE(slept->status == 200);
  json slept_body = json::parse(slept->body);
  CHECK(slept_body.at("version") == 0);
  CHECK(slept_body.at("usage").at("completion_tokens").get<int>() > 0);

  // POST query against latest_derived
  json query_body{{"question", "how many crates are there?"},
                  {"selector", "latest_derived"},
                  {"budget", {{"verbosity", 0}}}};
  auto answered = client.Post(("/contexts/" + id + "/query").c_str(),
                              query_body.dump(), "application/json");
  REQUIRE(answered);
  REQUIRE(answered->status == 200);
  json answer_body = json::parse(answered->body);
  CHECK(answer_body.at("numeric") == "64");
  CHECK(answer_body.at("context_kind") == "derived");

  // substitution: the answering request saw c' and not the raw c
  bool saw_answer_request = false;
  for (const auto& entry : mock.log()) {
    if (entry.request.messages.back().text.find("how many crates") ==
        std::string::npos)
      continue;
    saw_answer_request = true;
    for (const Message& message : entry.request.messages) {
      CHECK(message.text.find("RAW_SECRET") == std::string::npos);
    }
    bool has_derived = false;
    for (const Message& message : entry.request.messages)
      if (message.text.find("DERIVED: crate count") != std::string::npos)
        has_derived = true;
    CHECK(has_derived);
  }
  CHECK(saw_answer_request);
}

TEST_CASE("service: raw query works on a never-slept context") {
  TempDir dir;
  ContextStore store(dir.path / "store");
  MockBackend mock;
  mock.script({MockBackend::Matcher::Scope::last_message, "what is stored"},
              {send("The answer is 7")});

  ExperimentConfig config;
  RunningService running(config, mock, store);
  httplib::Client client("127.0.0.1", running.port);

  auto created = client.Post(
      "/contexts", json{{"raw", "a context with 7 things"}}.dump(),
      "application/json");
  std::string id = json::parse(created->body).at("context_id");

  json query{{"question", "what is stored?"}, {"selector", "raw"}};
  auto answered = client.Post(("/contexts/" + id + "/query").c_str(),
                              query.dump(), "application/json");
  REQUIRE(answered);
  CHECK(answered->status == 200);
  CHECK(json::parse(answered->body).at("numeric") == "7");

  // latest_derived on a never-slept context is a 422
  json bad{{"question", "x?"}, {"selector", "latest_derived"}};
  auto rejected = client.Post(("/contexts/" + id + "/query").c_str(),
                              bad.dump(), "application/json");
  REQUIRE(rejected);
  CHECK(rejected->status == 422);
}

TEST_CASE("service: 404, 422, 409 and 502 paths") {
  TempDir dir;
  ContextStore store(dir.path / "store");
  MockBackend mock;  // no scripts: sleep/query backend calls fail

  ExperimentConfig config;
  RunningService running(config, mock, store);
  httplib::Client client("127.0.0.1", running.port);

  std::string missing(64, '0');
  CHECK(client.Get(("/contexts/" + missing).c_str())->status == 404);
  CHECK(client.Post(("/contexts/" + missing + "/sleep").c_str(), "{}",
                    "application/json")
            ->status == 404);

  CHECK(client.Post("/contexts", "not json", "application/json")->status ==
        422);
  CHECK(client.Post("/contexts", R"({"raw":""})", "application/json")
            ->status == 422);

  auto created = client.Post("/contexts", R"({"raw":"some context"})",
                             "application/json");
  std::string id = json::parse(created->body).at("context_id");
  CHECK(client.Post(("/contexts/" + id + "/query").c_str(), R"({"question":""})",
                    "application/json")
            ->status == 422);

  // backend failure surfaces as 502
  auto failed = client.Post(("/contexts/" + id + "/sleep").c_str(), "{}",
                            "application/json");
  REQUIRE(failed);
  CHECK(failed->status == 502);
}

TEST_CASE("service: concurrent sleep on one context is single-flight") {
  TempDir dir;
  ContextStore store(dir.path / "store");
  MockBackend mock;
  // first sleep turn parks long enough for the second request to collide
  Scripted slow = rethink("v0");
  slow.delay_ms = 400;
  mock.script({MockBackend::Matcher::Scope::any_message, "slow context"},
              {slow, finish()});

  ExperimentConfig config;
  RunningService running(config, mock, store);

  auto created = httplib::Client("127.0.0.1", running.port)
                     .Post("/contexts", R"({"raw":"slow context body"})",
                           "application/json");
  std::string id = json::parse(created->body).at("context_id");

  int status_a = 0, status_b = 0;
  std::thread first([&] {
    httplib::Client c("127.0.0.1", running.port);
    auto r = c.Post(("/contexts/" + id + "/sleep").c_str(), "{}",
                    "application/json");
    if (r) status_a = r->status;
  });
  std::thread second([&] {
    // slight stagger so the first request wins the flight slot
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    httplib::Client c("127.0.0.1", running.port);
    auto r = c.Post(("/contexts/" + id + "/sleep").c_str(), "{}",
                    "application/json");
    if (r) status_b = r->status;
  });
  first.join();
  second.join();

  // one succeeded, one was rejected as already in flight
  bool ok = (status_a == 200 && status_b == 409) ||
            (status_a == 409 && status_b == 200);
  CHECK(ok);
}

TEST_CASE("service state survives restart via the store") {
  TempDir dir;
  std::string id;
  {
    ContextStore store(dir.path / "store");
    MockBackend mock;
    mock.script({MockBackend::Matcher::Scope::any_message, "durable"},
                {rethink("derived durable"), finish()});
    ExperimentConfig config;
    RunningService running(config, mock, store);
    httplib::Client client("127.0.0.1", running.port);
    auto created = client.Post("/contexts", R"({"raw":"durable context"})",
                               "application/json");
    id = json::parse(created->body).at("context_id");
    client.Post(("/contexts/" + id + "/sleep").c_str(), "{}",
                "application/json");
  }

  // new service, same store directory
  ContextStore store(dir.path / "store");
  MockBackend mock;
  ExperimentConfig config;
  RunningService running(config, mock, store);
  httplib::Client client("127.0.0.1", running.port);
  auto meta = client.Get(("/contexts/" + id).c_str());
  REQUIRE(meta);
  CHECK(meta->status == 200);
  CHECK(json::parse(meta->body).at("derived_count") == 1);
}
