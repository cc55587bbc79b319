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

#include <stdexcept>
#include <string>

namespace gepkit {

// Broad failure classes. The CLI maps each to its own exit code.
enum class ErrorClass {
  kConfig,      // bad or missing configuration / arguments
  kData,        // malformed, missing or inconsistent input data
  kDegenerate,  // a statistic is undefined for the given input
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}

  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorClass::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorClass::kData, what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorClass::kDegenerate, what) {}
};

// Store and ensemble file failures carry a finer-grained kind so callers and
// tests can tell a truncated matrix from a NaN.
enum class StoreErrorKind {
  kDimensionMismatch,
  kDuplicateId,
  kIo,
  kCorruptManifest,
  kByteLength,
  kNonFinite,
};

const char* to_string(StoreErrorKind kind);

class StoreError : public DataError {
 public:
  StoreError(StoreErrorKind kind, const std::string& what);

  StoreErrorKind kind() const noexcept { return kind_; }

 private:
  StoreErrorKind kind_;
};

}  // namespace gepkit
