// cli.h
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
//
// Copyright 2026 The convstruct Authors.

#ifndef CONVSTRUCT_CLI_H_
#define CONVSTRUCT_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace convstruct {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs one command line, program name excluded. Reports and data files go
// to `out` or to files named by the arguments; progress and diagnostics go
// to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);
int run_cli(const std::vector<std::string>& args);

}  // namespace convstruct

#endif  // CONVSTRUCT_CLI_H_
