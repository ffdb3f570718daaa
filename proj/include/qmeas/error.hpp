// Copyright 2026 The qmeas Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmeas {

enum class ErrorKind {
    NormalizationViolation,
    DomainError,
    NotContractive,
    GridTooNarrow,
    AliasingRisk,
    ZeroProbabilityReadout,
    CompletenessViolation,
    IncompatibleModel,
    UnknownOutcome,
    ZeroProbabilityOutcome,
    ZeroProbabilitySet,
    DegenerateKraus,
    ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Numerical guards map to CLI exit code 3, configuration problems to 2.
bool is_numerical_guard(ErrorKind kind);

/// Single exception type for the library; `kind()` says what went wrong.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

}  // namespace qmeas
