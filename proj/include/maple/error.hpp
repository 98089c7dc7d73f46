/*
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace maple {

enum class ErrorCode {
    UnknownMetamodel,
    MissingFile,
    DanglingEndpoint,
    BadTargetKind,
    ConformanceConflict,
    IoError,
    MalformedStore,
    SyntaxError,
    DuplicateNodeName,
    ValidationFailed,
    UnknownCallee,
    RecursiveCall,
    ParameterMismatch,
    UnboundPlaceholder,
    UnresolvedImplementation,
    UnmappedObjectFlow,
    SignatureMismatch,
    HandlerMissing,
    ArityMismatch,
    SpawnFailure,
    NonZeroExit,
    MissingDeclaredOutput,
    UsageError,
};

std::string_view to_string(ErrorCode code);

/// Source position inside a parsed document. Zero means unknown.
struct SourcePos {
    std::size_t line = 0;
    std::size_t column = 0;
};

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, SourcePos pos = {})
        : std::runtime_error(message), code_(code), pos_(pos) {}

    ErrorCode code() const noexcept { return code_; }
    const SourcePos& pos() const noexcept { return pos_; }

private:
    ErrorCode code_;
    SourcePos pos_;
};

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;     // short rule tag, e.g. "cycle"
    std::string message;
    std::string element;  // offending element name, may be empty
    SourcePos pos{};

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

bool has_errors(const std::vector<Diagnostic>& diags);

std::string format_diagnostic(const Diagnostic& d, std::string_view file = {});

/// Converts a byte offset into a 1-based line/column pair.
SourcePos position_of(std::string_view text, std::size_t offset);

}  // namespace maple
