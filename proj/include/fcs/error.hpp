// Copyright 2026 The fcs Authors
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

namespace fcs {

/// Base class for every error raised by the library. The `kind()` tag is
/// stable and is what the CLI prints as the diagnostic category.
class Error : public std::runtime_error {
   public:
    Error(std::string kind, const std::string &message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {
    }
    const std::string &kind() const noexcept {
        return kind_;
    }

   private:
    std::string kind_;
};

#define FCS_DEFINE_ERROR(Name, tag)                                      \
    struct Name : Error {                                                \
        explicit Name(const std::string &message) : Error(tag, message) { \
        }                                                                \
    };

FCS_DEFINE_ERROR(SectorMismatch, "sector-mismatch")
FCS_DEFINE_ERROR(OutOfRange, "out-of-range")
FCS_DEFINE_ERROR(UndefinedAnisotropy, "undefined-anisotropy")
FCS_DEFINE_ERROR(BranchError, "branch-error")
FCS_DEFINE_ERROR(ConservationViolation, "conservation-violation")
FCS_DEFINE_ERROR(UnderResolved, "under-resolved")
FCS_DEFINE_ERROR(CapExceeded, "cap-exceeded")
FCS_DEFINE_ERROR(UndefinedMoments, "undefined-moments")
FCS_DEFINE_ERROR(InsufficientData, "insufficient-data")
FCS_DEFINE_ERROR(DegenerateWeight, "degenerate-weight")
FCS_DEFINE_ERROR(InvalidArgument, "invalid-argument")
FCS_DEFINE_ERROR(ConfigError, "config-error")
FCS_DEFINE_ERROR(SchemaError, "schema-error")

#undef FCS_DEFINE_ERROR

}  // namespace fcs
