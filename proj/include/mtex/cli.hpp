/* Copyright 2026 The mtex Authors. All Rights Reserved.

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

#ifndef MTEX_CLI_HPP_
#define MTEX_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace mtex {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;   // bad flags or config, missing or unreadable inputs
constexpr int kExitRuntime = 2;  // failure while running (non-finite loss, divergence, write errors)

/// Entry point of the `mtex` tool. `args[0]` is the program name.
/// Subcommands: synthesize, train, generate, eval. Flags override values
/// from --config, which override built-in defaults.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtex

#endif  // MTEX_CLI_HPP_
