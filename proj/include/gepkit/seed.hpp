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

#include <cstdint>
#include <string>
#include <string_view>

namespace gepkit {

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Stable child seed for (component, index) under a root seed. Every random
// stream in the pipeline is drawn from a seed derived this way.
std::uint64_t derive_seed(std::uint64_t root, std::string_view component,
                          std::uint64_t index = 0);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

}  // namespace gepkit
