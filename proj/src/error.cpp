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

#include "gepkit/error.hpp"

namespace gepkit {

const char* to_string(StoreErrorKind kind) {
  switch (kind) {
    case StoreErrorKind::kDimensionMismatch:
      return "dimension mismatch";
    case StoreErrorKind::kDuplicateId:
      return "duplicate id";
    case StoreErrorKind::kIo:
      return "i/o failure";
    case StoreErrorKind::kCorruptManifest:
      return "corrupt manifest";
    case StoreErrorKind::kByteLength:
      return "byte-length mismatch";
    case StoreErrorKind::kNonFinite:
      return "non-finite value";
  }
  return "unknown";
}

StoreError::StoreError(StoreErrorKind kind, const std::string& what)
    : DataError(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace gepkit
