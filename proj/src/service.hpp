/* Copyright 2026 The mosseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// HTTP annotation service. Sequences live under <data>/<id>/ in the same
// folder layout the CLI reads; runs under <data>/<id>/runs/<run>/.

#ifndef MOSSEG_SERVICE_HPP_
#define MOSSEG_SERVICE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace mosseg {

struct ServiceOptions {
  std::filesystem::path data_dir;
  std::size_t max_upload_bytes = 256u << 20;
};

class Service {
 public:
  /// Reloads every sequence already under data_dir. Runs that were still
  /// running when the previous process died are marked "error".
  explicit Service(ServiceOptions opts);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void Mount(httplib::Server& server);
  /// Blocks until no propagation is running.
  void WaitForRuns();

  struct Entry;

 private:
  std::shared_ptr<Entry> Find(const std::string& id);
  std::shared_ptr<Entry> Register(std::shared_ptr<Entry> entry);

  ServiceOptions opts_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

/// Serves until SIGINT or SIGTERM. Returns false when the port cannot be bound.
bool Serve(const std::string& host, int port, const ServiceOptions& opts);

}  // namespace mosseg

#endif  // MOSSEG_SERVICE_HPP_
