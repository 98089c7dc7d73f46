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

#include "maple/chain.hpp"
#include "maple/discovery.hpp"
#include "maple/megamodel.hpp"

namespace maple::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view tag = "maple");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::filesystem::path fixture_dir();
std::filesystem::path golden_dir();
/// Directory holding the `maple` binary.
std::filesystem::path tool_dir();

void write_file(const std::filesystem::path& path, std::string_view text);

/// Copies the NFV fixture into `<dir>/ws` and returns that path.
std::filesystem::path copy_fixture(const std::filesystem::path& dir);

struct FixturePipeline {
    Megamodel mgm;
    PmDiscovery pm;
    TransformationChain chain;
};

/// discover_workspace, discover_pm and translate on a fixture copy.
FixturePipeline translate_fixture(const std::filesystem::path& ws,
                                  std::string_view pm_file = "flows/main.pm.json");

}  // namespace maple::testing
