/*
 * Copyright 2026 The Orthocast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Subcommands: synth, train, rdd, evaluate, check,
// sweep. Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numerical failure (including failed verification checks).

#ifndef ORTHOCAST_CLI_H_
#define ORTHOCAST_CLI_H_

#include <iosfwd>

namespace orthocast {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace orthocast

#endif  // ORTHOCAST_CLI_H_
