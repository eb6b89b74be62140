/*
 Copyright 2026 The platoon-mss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include <stdexcept>
#include <string>

namespace pmss {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameterError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct WellPosednessError : Error { using Error::Error; };
struct RealizationError : Error { using Error::Error; };
struct SingularityError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct InvalidModelError : Error { using Error::Error; };
struct UnsupportedModelError : Error { using Error::Error; };

// Raised when a dense Kronecker-sized object would exceed the memory guard.
struct GuardError : Error { using Error::Error; };

// Config problems; `field` is a JSON-pointer-like path.
struct SchemaError : Error {
    std::string field;
    SchemaError(std::string field_path, const std::string& what)
        : Error(field_path.empty() ? what : field_path + ": " + what), field(std::move(field_path)) {}
};

}  // namespace pmss
