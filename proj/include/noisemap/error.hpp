/*
 * Copyright 2026 The noisemap Authors.
 *
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

#pragma once

#include <stdexcept>
#include <string>

namespace noisemap {

// Coarse error classes. The CLI maps each one to a distinct exit code and
// prints the name so callers can branch on it without parsing messages.
enum class ErrorCategory {
  kConfiguration,
  kInsufficientData,
  kDegenerateGeometry,
  kIo,
  kSchema,
  kState,
  kUnseenCategory,
  kUndefinedRatio,
  kDegenerateGrid,
  kPrecondition,
};

inline const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfiguration:
      return "configuration";
    case ErrorCategory::kInsufficientData:
      return "insufficient_data";
    case ErrorCategory::kDegenerateGeometry:
      return "degenerate_geometry";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kSchema:
      return "schema";
    case ErrorCategory::kState:
      return "state";
    case ErrorCategory::kUnseenCategory:
      return "unseen_category";
    case ErrorCategory::kUndefinedRatio:
      return "undefined_ratio";
    case ErrorCategory::kDegenerateGrid:
      return "degenerate_grid";
    case ErrorCategory::kPrecondition:
      return "precondition";
  }
  return "unknown";
}

// Process exit code for a category; 0 is reserved for success and 1 for
// unexpected failures.
inline int exit_code(ErrorCategory category) {
  return 10 + static_cast<int>(category);
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category,
                              const std::string& message) {
  throw Error(category, message);
}

}  // namespace noisemap
