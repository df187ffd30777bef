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

#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "run_config.hpp"

namespace {

constexpr const char* kCommands[][2] = {
    {"ingest", "aggregate, join and impute raw data into a panel"},
    {"synth", "write a synthetic panel"},
    {"train", "fit the network and save a checkpoint"},
    {"eval", "score a checkpoint, or retrain per feature set, on the test split"},
    {"cv", "rolling cross-validation of the configured model"},
    {"ablate", "retrain with each input removed in turn"},
    {"importance", "permutation importance of every input"},
    {"pdp", "partial-dependence curves"},
    {"breakdown", "errors grouped by hour of day or region"},
    {"gradcheck", "compare gradients against finite differences"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UberNet demand forecasting: dilated causal convolutions plus evaluation harness"};
  app.set_config("--config", "", "flat `key = value` file; command-line flags take precedence");
  app.allow_config_extras(false);
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.footer(
      "Exit codes: 0 ok, 1 error, 2 schema, 3 parse, 4 divergence,\n"
      "5 checkpoint/schema mismatch, 6 gradient check failed, 64 usage.");

  ubernet::cli::RunConfig config;
  config.bind(app);
  for (const auto& [name, help] : kCommands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ubernet::cli::kUsage;
  }

  const auto command = app.get_subcommands().front()->get_name();
  try {
    return ubernet::cli::run_command(command, config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ubernet::cli::exit_code_for(e);
  }
}
