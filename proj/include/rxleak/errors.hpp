// Copyright 2026 The rxleak Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace rxleak {

/// Input that violates a documented contract: bad configuration, malformed
/// text, inconsistent dimensions. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed structured text. `line()` is 1-based, 0 when unknown.
class ParseError : public ValidationError {
   public:
    ParseError(const std::string &message, std::size_t line = 0)
        : ValidationError(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {
    }
    std::size_t line() const {
        return line_;
    }

   private:
    std::size_t line_;
};

/// Training diverged or produced non-finite values.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Corrupt or unreadable data file (bad magic, truncation, size mismatch).
class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace rxleak
