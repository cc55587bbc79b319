/* Copyright 2026 The gepkit Authors.

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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gepkit {

// Whole-file reads; throw StoreError(kIo) when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Shortest decimal that parses back to the same double.
std::string format_real(double value);

// Strict decimal parse of a whole field; throws DataError naming `what`.
double parse_real(std::string_view field, std::string_view what);
long long parse_int(std::string_view field, std::string_view what);

}  // namespace gepkit
