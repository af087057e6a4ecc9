// Copyright 2026 The vemul Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// HTTP front end for the simulated container engine. Serves the container
// lifecycle API over a unix socket plus /vemul-sim/* extension endpoints
// for network plumbing, switch management and fault injection.

#include <memory>
#include <string>
#include <thread>

namespace vemul::sim {

class World;

class SimEngine {
 public:
  SimEngine(std::string socket_path, uint64_t seed);
  ~SimEngine();

  // Starts the listener thread; returns once the socket accepts connections.
  bool start();
  void stop();
  // Serves on the calling thread until stopped (the `vemul simengine` mode).
  bool serve_blocking();

  const std::string &socket_path() const { return socket_path_; }
  World &world() { return *world_; }

 private:
  struct Impl;
  std::string socket_path_;
  std::unique_ptr<World> world_;
  std::unique_ptr<Impl> impl_;
  std::thread server_thread_;
};

}  // namespace vemul::sim
