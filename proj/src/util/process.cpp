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

#include "captune/util/process.hpp"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "captune/error.hpp"
#include "captune/util/io.hpp"

namespace captune::util {

std::string shell_quote(std::string_view arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

std::vector<std::string> run_line_filter(const std::string& command,
                                         std::string_view input) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const std::string stem = "captune-" + std::to_string(::getpid()) + "-" +
                           sha256_hex(command + std::string(input)).substr(0, 12);
  const fs::path in_path = dir / (stem + ".in");
  const fs::path out_path = dir / (stem + ".out");
  write_file(in_path, input);
  const std::string cmd = command + " < " + shell_quote(in_path.string()) + " > " +
                          shell_quote(out_path.string());
  const int status = std::system(cmd.c_str());
  std::error_code ec;
  fs::remove(in_path, ec);
  if (status != 0) {
    fs::remove(out_path, ec);
    throw IoError("external command failed (status " + std::to_string(status) +
                  "): " + command);
  }
  const std::string output = read_file(out_path);
  fs::remove(out_path, ec);
  std::vector<std::string> lines;
  std::istringstream ss(output);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  return lines;
}

}  // namespace captune::util
