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

#include <iosfwd>
#include <string>

#include "vemul/orchestrator.hpp"

namespace vemul {

struct ShellOptions {
  bool prompt = false;          // print a prompt (interactive terminals)
  int exec_timeout_ms = 120000;
};

// Line-oriented command loop against a live emulation. Every non-blank input
// line produces one response whose first token is `ok` or `err`; payload
// lines are indented two spaces. Never throws on user input; returns on
// `quit` or end of input.
int repl(Emulation &emu, std::istream &in, std::ostream &out,
         const ShellOptions &opts = {});

}  // namespace vemul
