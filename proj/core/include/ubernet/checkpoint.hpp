// Copyright 2026 The UberNet Authors
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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ubernet/net.hpp"
#include "ubernet/panel.hpp"

namespace ubernet {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  Network network;
  Normalizer normalizer;
  std::string schema_sha;
  CheckpointMeta meta;
};

// Hex SHA-256 over the ordered input columns (name, kind, cardinality).
std::string schema_fingerprint(const std::vector<InputColumn>& inputs);

// JSON document; every floating-point value is written with 17 significant
// digits so it parses back to the same double.
void write_checkpoint(std::ostream& out, const Network& net, const Normalizer& normalizer,
                      const CheckpointMeta& meta = {});
void save_checkpoint(const std::string& path, const Network& net, const Normalizer& normalizer,
                     const CheckpointMeta& meta = {});

// FormatError on malformed or truncated input; CompatibilityError when
// `expected_schema_sha` is given and differs from the stored fingerprint.
Checkpoint read_checkpoint(std::istream& in,
                           const std::optional<std::string>& expected_schema_sha = std::nullopt);
Checkpoint load_checkpoint(const std::string& path,
                           const std::optional<std::string>& expected_schema_sha = std::nullopt);

}  // namespace ubernet
