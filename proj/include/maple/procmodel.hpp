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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maple/error.hpp"

namespace maple {

enum class Direction { In, Out };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

struct Pin {
    std::string name;
    Direction direction = Direction::In;
    std::string metamodel;

    friend bool operator==(const Pin&, const Pin&) = default;
};

enum class NodeKind { Initial, Final, Action, CallActivity, Fork, Join, ObjectNode };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);

struct Node {
    std::string name;
    NodeKind kind = NodeKind::Action;
    std::string impl;       // Action only
    std::string callee;     // CallActivity only
    std::vector<Pin> pins;  // Action and CallActivity only
    std::string metamodel;  // ObjectNode only

    const Pin* find_pin(std::string_view pin, Direction direction) const;
    bool is_executable() const { return kind == NodeKind::Action || kind == NodeKind::CallActivity; }

    friend bool operator==(const Node&, const Node&) = default;
};

enum class EdgeKind { ControlFlow, ObjectFlow };

struct Edge {
    EdgeKind kind = EdgeKind::ControlFlow;
    std::string source;  // "<node>" or "<node>.<pin>"
    std::string target;
    std::string name;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// An edge endpoint split into node (or parameter) and optional pin.
struct EndpointRef {
    std::string node;
    std::string pin;

    bool has_pin() const { return !pin.empty(); }
};

EndpointRef split_endpoint(std::string_view ref);

struct ProcessModel {
    std::string name;
    std::vector<Pin> parameters;
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<std::string> calls;  // names of process models usable as callees

    const Node* find_node(std::string_view node) const;
    const Pin* find_parameter(std::string_view param) const;

    friend bool operator==(const ProcessModel&, const ProcessModel&) = default;
};

/// Parses the `.pm.json` document format. References stay symbolic.
ProcessModel parse_pm(std::string_view text);
ProcessModel load_pm(const std::filesystem::path& path);

/// Canonical rendering; parse_pm(print_pm(pm)) == pm.
std::string print_pm(const ProcessModel& pm);

/// Structural well-formedness. Empty result means the model is enactable.
std::vector<Diagnostic> validate_pm(const ProcessModel& pm);

/// A process model together with every process model it transitively calls.
struct ResolvedProcessModel {
    std::shared_ptr<const ProcessModel> root;
    std::map<std::string, std::shared_ptr<const ProcessModel>> callees;

    const ProcessModel& model(std::string_view name) const;
    /// Longest chain of nested call activities below the root (0 when flat).
    std::size_t call_depth() const;
};

ResolvedProcessModel resolve_calls(const ProcessModel& pm, const std::map<std::string, ProcessModel>& library);

struct LibraryEntry {
    std::filesystem::path path;
    ProcessModel model;
};

/// Scans `dir` for `*.pm.json` documents keyed by model name. Unparsable
/// files are reported through `problems` when given, thrown otherwise.
std::map<std::string, LibraryEntry> scan_pm_library(const std::filesystem::path& dir,
                                                    std::vector<Diagnostic>* problems = nullptr);

std::map<std::string, ProcessModel> load_pm_library(const std::filesystem::path& dir);

/// 1-based line of the first occurrence of `"needle"` in `text`, 0 if absent.
std::size_t line_of_quoted(std::string_view text, std::string_view needle);

}  // namespace maple
