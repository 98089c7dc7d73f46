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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maple/flatten.hpp"
#include "maple/graph.hpp"
#include "maple/launch.hpp"
#include "maple/megamodel.hpp"
#include "maple/weave.hpp"

namespace maple {

struct PinSignature {
    std::string name;
    std::string metamodel;

    friend bool operator==(const PinSignature&, const PinSignature&) = default;
};

struct Step {
    std::string id;
    ResourceId impl;
    std::string handler_kind;
    std::vector<PinSignature> in_pins;
    std::vector<PinSignature> out_pins;

    friend bool operator==(const Step&, const Step&) = default;
};

enum class BindingKind { Unbound, LaunchParameter, Intermediate, Artifact };

std::string_view to_string(BindingKind kind);

struct DataBinding {
    BindingKind kind = BindingKind::Unbound;
    std::string value;  // parameter name, virtual resource id, or path

    friend bool operator==(const DataBinding&, const DataBinding&) = default;
};

struct DataNode {
    std::string id;
    std::string metamodel;
    DataBinding binding;
    std::optional<Direction> parameter_direction;  // LaunchParameter only

    friend bool operator==(const DataNode&, const DataNode&) = default;
};

enum class GatewayKind { Fork, Join };

struct Gateway {
    std::string id;
    GatewayKind kind = GatewayKind::Fork;
    bool synthesized = false;

    friend bool operator==(const Gateway&, const Gateway&) = default;
};

/// In: data node -> step.pin. Out: step.pin -> data node.
struct DataEdge {
    std::string data_node;
    std::string step;
    std::string pin;
    Direction direction = Direction::In;

    friend bool operator==(const DataEdge&, const DataEdge&) = default;
};

struct TransformationChain {
    std::string name;
    std::vector<Step> steps;
    std::vector<DataNode> data_nodes;
    std::vector<Gateway> gateways;
    std::vector<std::pair<std::string, std::string>> control_edges;
    std::vector<DataEdge> data_edges;

    const Step* find_step(std::string_view id) const;
    const DataNode* find_data_node(std::string_view id) const;
    const Gateway* find_gateway(std::string_view id) const;
    /// Steps writing (or reading) `data_node`, sorted by id.
    std::vector<std::string> writers(std::string_view data_node) const;
    std::vector<std::string> readers(std::string_view data_node) const;
    /// Data node bound to `step.pin` in the given direction, if any.
    const DataNode* bound_node(std::string_view step, std::string_view pin, Direction direction) const;

    friend bool operator==(const TransformationChain&, const TransformationChain&) = default;
};

/// Steps and gateways as graph vertices, steps first, in declaration order.
struct ControlGraph {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t, std::less<>> index;
    graph::Digraph g;
    std::size_t step_count = 0;

    bool is_step(std::size_t v) const { return v < step_count; }
};

ControlGraph control_graph(const TransformationChain& chain);

TransformationChain build_chain(const FlatGraph& flat, const WeaveModel& weave, const Megamodel& mgm);

/// flatten, synthesize_concurrency and build_chain in one go.
TransformationChain translate(const ResolvedProcessModel& pm, const WeaveModel& weave, const Megamodel& mgm);

std::vector<Diagnostic> validate_chain(const TransformationChain& chain, const Megamodel& mgm,
                                       const LaunchConfig& launch);

std::string export_dot(const TransformationChain& chain);

std::filesystem::path chain_store_path(const std::filesystem::path& workspace_root, std::string_view pm_name);

std::string chain_to_json(const TransformationChain& chain);
TransformationChain chain_from_json(std::string_view text);
void save_chain(const TransformationChain& chain, const std::filesystem::path& path);
TransformationChain load_chain(const std::filesystem::path& path);

}  // namespace maple
