#pragma once

#include <memory>
#include <string>

#include "stabpade/pipeline.hpp"

namespace httplib {
class Server;
}

// HTTP facade over the pipeline.  Sessions live in memory (and in
// session_dir when given, one <id>.json per session).  Readers get immutable
// snapshots; writers copy, run a step and publish the new snapshot.
//
//   POST /sessions                        model+basis or an upload; 201, or 200 if it exists
//   GET  /sessions/{id}
//   POST /sessions/{id}/stabilize         job (202), or 200 with the stored record
//   POST /sessions/{id}/windows
//   POST /sessions/{id}/fit               422 over a detected crossing unless force
//   POST /sessions/{id}/trajectory
//   POST /sessions/{id}/stationary
//   POST /sessions/{id}/crosscheck
//   POST /sessions/{id}/branch_point
//   GET  /sessions/{id}/landscape         job (202), or 200 with the stored record
//   GET  /jobs/{id}
//
// Errors are {"error", "kind", "field"?}: 400 validation, 404 unknown id,
// 409 while a job holds the session, 422 crossing guard or numeric failure.

namespace stabpade {

class Service {
 public:
  explicit Service(Config config, std::string session_dir = {});
  ~Service();  // waits for running jobs
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void mount(httplib::Server& server);
  void wait_for_jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocks until the process is stopped.
void serve(const std::string& host, int port, const Config& config, const std::string& session_dir);

}  // namespace stabpade
