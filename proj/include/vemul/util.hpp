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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vemul::util {

std::vector<std::string> split(const std::string &s, char sep);

// Whitespace tokenizer with double-quote grouping ("a b" is one token).
std::vector<std::string> tokenize(const std::string &line);

std::string trim(const std::string &s);
std::string to_lower(std::string s);
bool starts_with(const std::string &s, const std::string &prefix);

std::string join(const std::vector<std::string> &parts, const std::string &sep);

// Fixed-point text for reports: two decimals unless told otherwise.
std::string fmt_double(double v, int decimals = 2);

std::optional<double> parse_double(const std::string &s);
std::optional<long long> parse_int(const std::string &s);

// "10.0.0.1" -> uint32 host order; nullopt when not a dotted quad.
std::optional<uint32_t> parse_ipv4(const std::string &s);
std::string ipv4_to_string(uint32_t addr);
// "10.0.0.1/24" -> (addr, prefix)
std::optional<std::pair<uint32_t, int>> parse_cidr(const std::string &s);
bool same_subnet(uint32_t a, uint32_t b, int prefix);

uint64_t fnv1a(const std::string &s);
std::string hex(uint64_t v, int digits);
std::string random_hex(int digits);

int64_t mono_ms();

// argv runner without a shell; captures stdout/stderr.
struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};
CmdResult run_cmd(const std::vector<std::string> &argv, int timeout_ms = 15000);

}  // namespace vemul::util
