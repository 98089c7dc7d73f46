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

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "maple/error.hpp"

namespace maple {

using Json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Parses JSON text, raising `code` with line/column on malformed input.
Json parse_json(std::string_view text, ErrorCode code, std::string_view what);

/// Typed member access raising `code` when the key is absent or mistyped.
const Json& require_member(const Json& object, std::string_view key, ErrorCode code,
                           std::string_view context);
std::string require_string(const Json& object, std::string_view key, ErrorCode code,
                           std::string_view context);
std::string optional_string(const Json& object, std::string_view key, ErrorCode code,
                            std::string_view context);

std::string dump_json(const Json& value);

}  // namespace maple
