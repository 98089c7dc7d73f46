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

#include "maple/error.hpp"

#include <algorithm>

namespace maple {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownMetamodel: return "UnknownMetamodel";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
        case ErrorCode::BadTargetKind: return "BadTargetKind";
        case ErrorCode::ConformanceConflict: return "ConformanceConflict";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MalformedStore: return "MalformedStore";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::DuplicateNodeName: return "DuplicateNodeName";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::UnknownCallee: return "UnknownCallee";
        case ErrorCode::RecursiveCall: return "RecursiveCall";
        case ErrorCode::ParameterMismatch: return "ParameterMismatch";
        case ErrorCode::UnboundPlaceholder: return "UnboundPlaceholder";
        case ErrorCode::UnresolvedImplementation: return "UnresolvedImplementation";
        case ErrorCode::UnmappedObjectFlow: return "UnmappedObjectFlow";
        case ErrorCode::SignatureMismatch: return "SignatureMismatch";
        case ErrorCode::HandlerMissing: return "HandlerMissing";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::SpawnFailure: return "SpawnFailure";
        case ErrorCode::NonZeroExit: return "NonZeroExit";
        case ErrorCode::MissingDeclaredOutput: return "MissingDeclaredOutput";
        case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
    std::string out;
    if (!file.empty()) {
        out += file;
        if (d.pos.line > 0) {
            out += ":" + std::to_string(d.pos.line) + ":" + std::to_string(d.pos.column);
        }
        out += ": ";
    }
    out += d.severity == Severity::Error ? "error" : "warning";
    out += ": ";
    if (!d.code.empty()) out += "[" + d.code + "] ";
    out += d.message;
    return out;
}

SourcePos position_of(std::string_view text, std::size_t offset) {
    SourcePos pos{1, 1};
    offset = std::min(offset, text.size());
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++pos.line;
            pos.column = 1;
        } else {
            ++pos.column;
        }
    }
    return pos;
}

}  // namespace maple
