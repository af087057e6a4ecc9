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

#include "vemul/metrics.hpp"

namespace vemul {

namespace {

std::string key(const std::string &emulator, const std::string &family, int switch_count,
                const std::string &metric) {
  return emulator + "/" + family + "/" + std::to_string(switch_count) + "/" + metric;
}

struct Row {
  int s;
  double star, mesh, tree;
};

void fill(ReferenceTable &t, const std::string &emulator, const std::string &metric,
          const Row *rows, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    t.set(emulator, "star", rows[i].s, metric, rows[i].star);
    t.set(emulator, "mesh", rows[i].s, metric, rows[i].mesh);
    t.set(emulator, "tree", rows[i].s, metric, rows[i].tree);
  }
}

// CPU use (%), limit 200%.
const Row kCpuMininet[] = {
    {9, 1.06, 1.14, 1.11},      {17, 1.78, 2.35, 2.13},    {33, 2.82, 3.88, 3.95},
    {65, 3.93, 6.63, 4.65},     {129, 18.25, 26.67, 20.10}, {257, 37.01, 41.06, 38.45},
    {513, 51.27, 55.5, 52.75},
};
const Row kCpuVsdnemul[] = {
    {9, 2.70, 2.72, 2.71},       {17, 5.56, 6.50, 6.31},      {33, 15.65, 26.21, 17.05},
    {65, 41.32, 35.85, 32.42},   {129, 36.47, 42.82, 38.23},  {257, 83.63, 92.26, 86.16},
    {513, 169.35, 182.13, 173.22},
};

// Memory use (megabytes).
const Row kMemMininet[] = {
    {9, 116.7, 118.82, 117.3},  {17, 129.4, 130.0, 128.2},  {33, 129.1, 132.2, 130.9},
    {65, 155.8, 160.1, 158.1},  {129, 210.7, 219.1, 213.9}, {257, 317.1, 323.5, 318.7},
    {513, 344.1, 339.1, 347.0},
};
const Row kMemVsdnemul[] = {
    {9, 117.6, 117.7, 117.7},        {17, 222.3, 224.4, 223.3},
    {33, 437.6, 450.7, 445.8},       {65, 841.9, 863.8, 856.6},
    {129, 1725.2, 1790.0, 1754.0},   {257, 3453.6, 3651.7, 3510.2},
    {513, 7121.8, 7276.7, 7237.4},
};

// Latency from first ping (milliseconds).
const Row kPingMininet[] = {
    {9, 18.7, 20.8, 24.9},      {17, 29.2, 29.9, 30.8},     {33, 63.6, 74.2, 56.6},
    {65, 77.2, 89.8, 73.9},     {129, 143.1, 181.1, 144.0}, {257, 344.2, 380.3, 337.5},
    {513, 650.2, 726.0, 672.5},
};
const Row kPingVsdnemul[] = {
    {9, 16.7, 16.0, 17.6},      {17, 24.5, 25.5, 26.0},     {33, 58.1, 59.1, 55.2},
    {65, 88.6, 89.6, 70.3},     {129, 154.3, 159.3, 129.0}, {257, 359.1, 364.1, 294.4},
    {513, 628.3, 635.3, 609.9},
};

}  // namespace

std::optional<double> ReferenceTable::lookup(const std::string &emulator,
                                             const std::string &family, int switch_count,
                                             const std::string &metric) const {
  auto it = cells_.find(key(emulator, family, switch_count, metric));
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

void ReferenceTable::set(const std::string &emulator, const std::string &family,
                         int switch_count, const std::string &metric, double value) {
  cells_[key(emulator, family, switch_count, metric)] = value;
}

const ReferenceTable &ReferenceTable::paper() {
  static const ReferenceTable table = [] {
    ReferenceTable t;
    fill(t, "mininet", "cpu_percent", kCpuMininet, std::size(kCpuMininet));
    fill(t, "vsdnemul", "cpu_percent", kCpuVsdnemul, std::size(kCpuVsdnemul));
    fill(t, "mininet", "memory_mb", kMemMininet, std::size(kMemMininet));
    fill(t, "vsdnemul", "memory_mb", kMemVsdnemul, std::size(kMemVsdnemul));
    fill(t, "mininet", "first_ping_ms", kPingMininet, std::size(kPingMininet));
    fill(t, "vsdnemul", "first_ping_ms", kPingVsdnemul, std::size(kPingVsdnemul));
    return t;
  }();
  return table;
}

}  // namespace vemul
