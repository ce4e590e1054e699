#pragma once

#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "sleepd/config.hpp"
#include "sleepd/store.hpp"

namespace httplib {
class Server;
}

namespace sleepd {

// Long-running front door over the store and backend:
//   POST /contexts                     {"raw": ...} -> {"context_id": ...}
//   POST /contexts/<id>/sleep          SleepConfig overrides -> versions+usage
//   POST /contexts/<id>/query          {"question","budget","selector"} -> answer
//   GET  /contexts/<id>                record metadata
//
// Sleep is single-flight per context (409 on overlap); queries are
// concurrent, and append-only versioning means a reader never sees a torn
// derived context.
class Service {
 public:
  Service(ExperimentConfig config, Backend& backend, ContextStore& store);
  ~Service();

  // Blocks until stop() is called from another thread.
  bool listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it (for tests).
  int bind_any(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool is_running() const;

 private:
  void install_routes();

  ExperimentConfig config_;
  Backend& backend_;
  ContextStore& store_;
  std::unique_ptr<httplib::Server> server_;

  std::mutex sleeping_mutex_;
  std::set<std::string> sleeping_;
};

}  // namespace sleepd
