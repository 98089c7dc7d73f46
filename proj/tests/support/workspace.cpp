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

#include "workspace.hpp"

#include <cstdlib>
#include <stdexcept>

#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple::testing {

TempDir::TempDir(std::string_view tag) {
    auto pattern = (fs::temp_directory_path() / (std::string(tag) + "-XXXXXX")).string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed for " + pattern);
    path_ = fs::path(pattern);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path fixture_dir() { return fs::path(MAPLE_FIXTURE_DIR) / "nfv"; }

fs::path golden_dir() { return fs::path(MAPLE_FIXTURE_DIR) / "nfv-golden"; }

fs::path tool_dir() { return fs::path(MAPLE_TOOL_DIR); }

void write_file(const fs::path& path, std::string_view text) { write_text_file(path, text); }

fs::path copy_fixture(const fs::path& dir) {
    auto ws = dir / "ws";
    fs::copy(fixture_dir(), ws, fs::copy_options::recursive);
    return ws;
}

FixturePipeline translate_fixture(const fs::path& ws, std::string_view pm_file) {
    FixturePipeline p{base_megamodel(ws), {}, {}};
    discover_workspace(ws, p.mgm);
    auto pm_path = ws / pm_file;
    p.pm = discover_pm(pm_path, p.mgm, pm_path.parent_path());
    p.chain = translate(p.pm.resolved, p.pm.weave, p.mgm);
    return p;
}

}  // namespace maple::testing
