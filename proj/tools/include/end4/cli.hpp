// Copyright 2026 The End4 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef END4_CLI_HPP_
#define END4_CLI_HPP_

#include <string>
#include <vector>

namespace end4 {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Runs one subcommand: gen-masks | synth | train | eval | perturb-eval |
// export-features | validate-manifest. Returns the process exit code.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, char** argv);

}  // namespace end4

#endif  // END4_CLI_HPP_
