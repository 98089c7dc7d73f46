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

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maple/chain.hpp"
#include "maple/launch.hpp"
#include "maple/megamodel.hpp"

namespace maple {

/// Everything a handler needs to run one step; paths are absolute.
struct StepInvocation {
    std::string step_id;
    std::string run_id;
    Resource impl;
    std::filesystem::path impl_path;
    std::filesystem::path workspace;
    std::vector<std::pair<std::string, std::filesystem::path>> inputs;   // pin order
    std::vector<std::pair<std::string, std::filesystem::path>> outputs;  // pin order
    std::map<std::string, std::string> env;  // launch env plus MAPLE_* variables
    std::filesystem::path stdout_log;
    std::filesystem::path stderr_log;
};

struct HandlerResult {
    bool ok = true;
    int exit_code = 0;
    std::optional<ErrorCode> error;
    std::string message;
};

struct Handler {
    std::string kind;
    std::function<HandlerResult(const StepInvocation&)> run;
};

class HandlerRegistry {
public:
    void add(Handler handler);
    const Handler* find(std::string_view kind) const;
    std::vector<std::string> kinds() const;

private:
    std::map<std::string, Handler, std::less<>> handlers_;
};

/// Result of one builtin operation (copy, concat, template, fail).
struct BuiltinOutcome {
    int exit_code = 0;
    std::string message;
};

/// Shared by the builtin handler and the `run-step` command. Throws
/// ArityMismatch or UsageError for bad arguments.
BuiltinOutcome run_builtin_op(std::string_view op, const std::vector<std::filesystem::path>& inputs,
                              const std::vector<std::filesystem::path>& outputs, std::string_view step_id);

Handler builtin_handler();

/// Spawns the spec's command. `tool_dirs` are prepended to the child's PATH;
/// the directory of the running executable is always included.
Handler exec_handler(std::vector<std::filesystem::path> tool_dirs = {});

HandlerRegistry default_handlers(std::vector<std::filesystem::path> tool_dirs = {});

enum class StepStatus { NotStarted, Running, Completed, Failed };

std::string_view to_string(StepStatus status);

struct StepRecord {
    StepStatus status = StepStatus::NotStarted;
    std::string handler_kind;
    std::optional<std::int64_t> started_at_ms;  // unix epoch
    std::optional<std::int64_t> ended_at_ms;
    int exit_code = 0;
    std::string error;  // error code name, empty on success
    std::string message;
};

struct ArtifactRecord {
    std::string data_node;
    std::string path;  // workspace-relative
    ResourceId resource;
    std::string producer;

    friend bool operator==(const ArtifactRecord&, const ArtifactRecord&) = default;
};

struct EnactmentReport {
    std::string run_id;
    std::map<std::string, StepRecord> steps;
    std::vector<ArtifactRecord> artifacts;
    std::vector<ResourceId> mgm_delta;
    bool success = false;
    std::string failed_step;  // empty on success or when no single step is to blame
    std::string message;
    /// Firing order of steps and gateways, for inspection.
    std::vector<std::string> firing_order;

    std::vector<std::string> completed() const;
};

std::filesystem::path run_directory(const std::filesystem::path& workspace_root, std::string_view run_id);

/// Runs the chain with token semantics, up to launch.max_parallel steps at a
/// time. Throws ValidationFailed when validate_chain reports errors and
/// HandlerMissing when a handler kind is not registered.
EnactmentReport enact(const TransformationChain& chain, const LaunchConfig& launch, Megamodel& mgm,
                      const HandlerRegistry& handlers);

/// Reference interpreter: one step at a time, smallest eligible step id first.
EnactmentReport enact_sequential(const TransformationChain& chain, const LaunchConfig& launch, Megamodel& mgm,
                                 const HandlerRegistry& handlers);

std::string report_to_json(const EnactmentReport& report);
EnactmentReport report_from_json(std::string_view text);

}  // namespace maple
