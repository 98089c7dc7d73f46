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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maple/megamodel.hpp"
#include "maple/procmodel.hpp"
#include "maple/weave.hpp"

namespace maple {

struct ExecParameter {
    std::string name;
    Direction direction = Direction::In;
    std::string metamodel;
    std::string model_ref;  // pin name in the process model

    friend bool operator==(const ExecParameter&, const ExecParameter&) = default;
};

/// Contents of a `.process` (or `.builtin`) file.
struct ExecSpec {
    std::string name;
    std::string command;
    std::vector<ExecParameter> parameters;

    const ExecParameter* find_parameter(std::string_view name) const;
    const ExecParameter* find_by_ref(std::string_view model_ref, Direction direction) const;

    friend bool operator==(const ExecSpec&, const ExecSpec&) = default;
};

/// `{name}` placeholders in order of appearance.
std::vector<std::string> command_placeholders(std::string_view command);

ExecSpec parse_exec_spec(std::string_view text);
ExecSpec load_exec_spec(const std::filesystem::path& path);

/// Data a loader pulls out of a file for its megamodel entry.
struct LoaderExtract {
    std::string name;
    std::optional<std::string> metamodel;  // descriptor name
    std::map<std::string, std::string> meta;
};

struct LoaderSpec {
    std::string name;
    std::vector<std::string> extensions;
    ResourceKind yields = ResourceKind::ModelInstance;
    std::function<LoaderExtract(const std::filesystem::path&)> extract;

    bool matches(const std::filesystem::path& path) const;
};

/// Metamodel descriptors, process models, `.process` exec specs and
/// `.builtin` step specs.
std::vector<LoaderSpec> default_loaders();

/// Throws UsageError when two loaders could claim the same file name.
void check_loader_disjointness(const std::vector<LoaderSpec>& loaders);

const LoaderSpec* classify(const std::filesystem::path& path, const std::vector<LoaderSpec>& loaders);

/// Registers one file through its loader, returning nullopt when no loader
/// claims it. ModelInstances are declared via `.conforms` sidecars instead.
std::optional<ResourceId> register_file(const std::filesystem::path& path, Megamodel& mgm,
                                        const std::vector<LoaderSpec>& loaders = default_loaders());

struct DiscoveryReport {
    std::vector<ResourceId> registered;                       // newly added only
    std::vector<std::pair<std::string, std::string>> skipped;  // (path, reason)
    std::vector<Diagnostic> warnings;
};

DiscoveryReport discover_workspace(const std::filesystem::path& root, Megamodel& mgm,
                                   const std::vector<LoaderSpec>& loaders = default_loaders());

struct PmDiscovery {
    ResourceId pm;
    WeaveModel weave;
    ResolvedProcessModel resolved;
};

/// Registers a process model, every implementation it (transitively) uses and
/// the virtual models backing its data carriers, then weaves it. `library` is
/// the directory holding callee process models.
PmDiscovery discover_pm(const std::filesystem::path& pm_path, Megamodel& mgm, const std::filesystem::path& library,
                        const std::vector<LoaderSpec>& loaders = default_loaders());

}  // namespace maple
