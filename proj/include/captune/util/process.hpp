// Copyright 2026 The captune Authors
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

#include <string>
#include <string_view>
#include <vector>

namespace captune::util {

/// Single-quotes an argument for /bin/sh.
std::string shell_quote(std::string_view arg);

/// Runs `command` through the shell with `input` on stdin and returns its
/// stdout split into lines. Throws IoError when the command fails.
std::vector<std::string> run_line_filter(const std::string& command,
                                         std::string_view input);

}  // namespace captune::util
