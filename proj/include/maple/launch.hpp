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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "maple/error.hpp"

namespace maple {

struct LaunchConfig {
    std::string run_id;  // generated at enactment when empty
    std::map<std::string, std::string> bindings;  // parameter -> workspace-relative path
    std::map<std::string, std::string> env;
    int max_parallel = 4;

    friend bool operator==(const LaunchConfig&, const LaunchConfig&) = default;
};

/// Unknown top-level keys are accepted and reported through `warnings`.
LaunchConfig parse_launch_config(std::string_view text, std::vector<Diagnostic>* warnings = nullptr);

std::string launch_config_to_json(const LaunchConfig& config);

}  // namespace maple
