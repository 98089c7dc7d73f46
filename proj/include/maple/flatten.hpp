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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maple/graph.hpp"
#include "maple/procmodel.hpp"

namespace maple {

enum class FlatNodeKind { Action, Fork, Join };

struct FlatNode {
    std::string id;  // qualified: "<call>.<call>.<node>"
    FlatNodeKind kind = FlatNodeKind::Action;
    bool synthesized = false;
    std::string pm;    // owning process model; empty for synthesized gateways
    std::string impl;  // Action only
    std::vector<Pin> pins;

    friend bool operator==(const FlatNode&, const FlatNode&) = default;
};

enum class CarrierKind { Parameter, ObjectNode, Flow };

/// A data carrier of the flattened process: a root parameter, an object
/// node, or a pin-to-pin object flow. Callee parameters are spliced onto the
/// carrier bound at the call site and never appear here.
struct Carrier {
    std::string id;            // data node id in the chain
    std::string virtual_name;  // megamodel resource backing it: "<pm>.<local>"
    CarrierKind kind = CarrierKind::Flow;
    std::string metamodel;
    std::optional<Direction> parameter_direction;  // Parameter only

    friend bool operator==(const Carrier&, const Carrier&) = default;
};

struct PinBinding {
    std::size_t node = 0;
    std::string pin;
    Direction direction = Direction::In;
    std::size_t carrier = 0;

    friend bool operator==(const PinBinding&, const PinBinding&) = default;
};

/// Hierarchy-free process graph. `control` holds precedence edges between
/// nodes (actions and gateways); bindings attach action pins to carriers.
struct FlatGraph {
    std::string name;
    std::vector<FlatNode> nodes;
    graph::Digraph control;
    std::vector<Carrier> carriers;
    std::vector<PinBinding> bindings;

    std::optional<std::size_t> node_index(std::string_view id) const;
    std::optional<std::size_t> carrier_index(std::string_view id) const;
    std::vector<std::size_t> writers(std::size_t carrier) const;
    std::vector<std::size_t> readers(std::size_t carrier) const;
    /// control plus writer->reader edges for every carrier.
    graph::Digraph precedence() const;
};

/// Inlines call activities, elides initial/final nodes and call boundaries,
/// and splices call-site pins onto callee parameters.
FlatGraph flatten(const ResolvedProcessModel& pm);

/// Replaces the precedence relation by its transitive reduction and inserts
/// fork/join gateways where unordered branches diverge or converge.
FlatGraph synthesize_concurrency(const FlatGraph& flat);

}  // namespace maple
