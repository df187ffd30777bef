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

#include <exception>
#include <iosfwd>
#include <string>

#include "run_config.hpp"

namespace ubernet::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kSchemaFailure = 2,
  kParseFailure = 3,
  kDiverged = 4,
  kCheckpointMismatch = 5,
  kGradCheckFailed = 6,
  kUsage = 64,
};

int exit_code_for(const std::exception& e);

// Each command writes its artifacts under config.out and returns an exit
// code; errors propagate as exceptions.
int run_command(const std::string& command, const RunConfig& config, std::ostream& log);

}  // namespace ubernet::cli
