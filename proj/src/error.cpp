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

#include "qmeas/error.hpp"

namespace qmeas {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NormalizationViolation: return "NormalizationViolation";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NotContractive: return "NotContractive";
        case ErrorKind::GridTooNarrow: return "GridTooNarrow";
        case ErrorKind::AliasingRisk: return "AliasingRisk";
        case ErrorKind::ZeroProbabilityReadout: return "ZeroProbabilityReadout";
        case ErrorKind::CompletenessViolation: return "CompletenessViolation";
        case ErrorKind::IncompatibleModel: return "IncompatibleModel";
        case ErrorKind::UnknownOutcome: return "UnknownOutcome";
        case ErrorKind::ZeroProbabilityOutcome: return "ZeroProbabilityOutcome";
        case ErrorKind::ZeroProbabilitySet: return "ZeroProbabilitySet";
        case ErrorKind::DegenerateKraus: return "DegenerateKraus";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

bool is_numerical_guard(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
        case ErrorKind::DomainError:
        case ErrorKind::NormalizationViolation:
        case ErrorKind::UnknownOutcome:
            return false;
        default:
            return true;
    }
}

}  // namespace qmeas
