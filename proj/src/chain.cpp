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

#include "maple/chain.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "maple/discovery.hpp"
#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple {

namespace {

constexpr int kChainVersion = 1;

constexpr std::pair<BindingKind, std::string_view> kBindingNames[] = {
    {BindingKind::Unbound, "Unbound"},
    {BindingKind::LaunchParameter, "LaunchParameter"},
    {BindingKind::Intermediate, "Intermediate"},
    {BindingKind::Artifact, "Artifact"},
};

std::string mismatch(const std::string& step, const std::string& what) {
    return "step \"" + step + "\": " + what;
}

void check_signature(const FlatNode& node, const ExecSpec& spec) {
    for (const auto& pin : node.pins) {
        const auto* p = spec.find_by_ref(pin.name, pin.direction);
        if (!p) {
            throw Error(ErrorCode::SignatureMismatch,
                        mismatch(node.id, std::string(to_string(pin.direction)) + " pin \"" + pin.name +
                                              "\" has no parameter in \"" + spec.name + "\""));
        }
        if (p->metamodel != pin.metamodel) {
            throw Error(ErrorCode::SignatureMismatch,
                        mismatch(node.id, "pin \"" + pin.name + "\" conforms to \"" + pin.metamodel + "\" but \"" +
                                              spec.name + "\" expects \"" + p->metamodel + "\""));
        }
    }
    for (const auto& p : spec.parameters) {
        auto has_pin = std::any_of(node.pins.begin(), node.pins.end(), [&](const Pin& pin) {
            return pin.name == p.model_ref && pin.direction == p.direction;
        });
        if (!has_pin) {
            throw Error(ErrorCode::SignatureMismatch,
                        mismatch(node.id, "parameter \"" + p.name + "\" of \"" + spec.name + "\" has no " +
                                              std::string(to_string(p.direction)) + " pin \"" + p.model_ref + "\""));
        }
    }
}

std::string metamodel_name(const Megamodel& mgm, const Resource& r) {
    if (!r.metamodel) return {};
    auto mm = mgm.get(*r.metamodel);
    return mm ? mm->name : std::string{};
}

std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string_view to_string(BindingKind kind) {
    for (auto [k, name] : kBindingNames) {
        if (k == kind) return name;
    }
    return "?";
}

const Step* TransformationChain::find_step(std::string_view step) const {
    for (const auto& s : steps) {
        if (s.id == step) return &s;
    }
    return nullptr;
}

const DataNode* TransformationChain::find_data_node(std::string_view node) const {
    for (const auto& d : data_nodes) {
        if (d.id == node) return &d;
    }
    return nullptr;
}

const Gateway* TransformationChain::find_gateway(std::string_view gateway) const {
    for (const auto& g : gateways) {
        if (g.id == gateway) return &g;
    }
    return nullptr;
}

std::vector<std::string> TransformationChain::writers(std::string_view data_node) const {
    std::set<std::string> out;
    for (const auto& e : data_edges) {
        if (e.data_node == data_node && e.direction == Direction::Out) out.insert(e.step);
    }
    return {out.begin(), out.end()};
}

std::vector<std::string> TransformationChain::readers(std::string_view data_node) const {
    std::set<std::string> out;
    for (const auto& e : data_edges) {
        if (e.data_node == data_node && e.direction == Direction::In) out.insert(e.step);
    }
    return {out.begin(), out.end()};
}

const DataNode* TransformationChain::bound_node(std::string_view step, std::string_view pin,
                                                Direction direction) const {
    for (const auto& e : data_edges) {
        if (e.step == step && e.pin == pin && e.direction == direction) return find_data_node(e.data_node);
    }
    return nullptr;
}

ControlGraph control_graph(const TransformationChain& chain) {
    ControlGraph cg;
    for (const auto& s : chain.steps) cg.ids.push_back(s.id);
    cg.step_count = cg.ids.size();
    for (const auto& g : chain.gateways) cg.ids.push_back(g.id);
    cg.g = graph::Digraph(cg.ids.size());
    for (std::size_t i = 0; i < cg.ids.size(); ++i) cg.index.emplace(cg.ids[i], i);
    for (const auto& [from, to] : chain.control_edges) {
        auto a = cg.index.find(from);
        auto b = cg.index.find(to);
        if (a == cg.index.end() || b == cg.index.end()) {
            throw Error(ErrorCode::DanglingEndpoint, "control edge " + from + " -> " + to + " has an unknown endpoint");
        }
        cg.g.add_edge(a->second, b->second);
    }
    return cg;
}

TransformationChain build_chain(const FlatGraph& flat, const WeaveModel& weave, const Megamodel& mgm) {
    TransformationChain chain;
    chain.name = flat.name;

    std::vector<std::string> rank;
    for (const auto& n : flat.nodes) rank.push_back(n.id);
    auto topo = graph::topological_order(flat.control, rank);
    if (!topo) throw Error(ErrorCode::ValidationFailed, "flattened process \"" + flat.name + "\" is cyclic");

    for (auto v : *topo) {
        const auto& node = flat.nodes[v];
        if (node.kind != FlatNodeKind::Action) {
            chain.gateways.push_back(
                {node.id, node.kind == FlatNodeKind::Fork ? GatewayKind::Fork : GatewayKind::Join, node.synthesized});
            continue;
        }
        auto impl = weave.action_impl(node.id);
        if (!impl) throw Error(ErrorCode::UnresolvedImplementation, "action \"" + node.id + "\" has no ActionMapping");
        auto res = mgm.get(*impl);
        if (!res) {
            throw Error(ErrorCode::UnresolvedImplementation,
                        "implementation " + impl->value + " of \"" + node.id + "\" is not in the megamodel");
        }
        auto handler = res->meta.find("handler");
        if (handler == res->meta.end() || handler->second.empty()) {
            throw Error(ErrorCode::UnresolvedImplementation,
                        "implementation \"" + res->name + "\" of \"" + node.id + "\" declares no handler kind");
        }
        check_signature(node, load_exec_spec(mgm.absolute_path(res->location)));

        Step step{node.id, *impl, handler->second, {}, {}};
        for (const auto& p : node.pins) {
            (p.direction == Direction::In ? step.in_pins : step.out_pins).push_back({p.name, p.metamodel});
        }
        chain.steps.push_back(std::move(step));
    }

    for (const auto& c : flat.carriers) {
        DataNode d{c.id, c.metamodel, {}, std::nullopt};
        if (c.kind == CarrierKind::Parameter) {
            d.binding = {BindingKind::LaunchParameter, c.id};
            d.parameter_direction = c.parameter_direction;
        } else {
            auto res = weave.carrier_resource(c.id);
            if (!res) throw Error(ErrorCode::UnmappedObjectFlow, "data carrier \"" + c.id + "\" has no ObjectNodeMapping");
            d.binding = {BindingKind::Intermediate, res->value};
        }
        chain.data_nodes.push_back(std::move(d));
    }

    for (auto [u, v] : flat.control.edges()) chain.control_edges.emplace_back(flat.nodes[u].id, flat.nodes[v].id);
    std::sort(chain.control_edges.begin(), chain.control_edges.end());

    for (const auto& b : flat.bindings) {
        chain.data_edges.push_back({flat.carriers[b.carrier].id, flat.nodes[b.node].id, b.pin, b.direction});
    }
    return chain;
}

TransformationChain translate(const ResolvedProcessModel& pm, const WeaveModel& weave, const Megamodel& mgm) {
    return build_chain(synthesize_concurrency(flatten(pm)), weave, mgm);
}

std::vector<Diagnostic> validate_chain(const TransformationChain& chain, const Megamodel& mgm,
                                       const LaunchConfig& launch) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string code, std::string msg, std::string element) {
        out.push_back({Severity::Error, std::move(code), std::move(msg), std::move(element), {}});
    };

    std::set<std::string> params;
    for (const auto& d : chain.data_nodes) {
        if (!mgm.metamodel_by_name(d.metamodel)) {
            error("unknown-metamodel", "data node \"" + d.id + "\" uses unknown metamodel \"" + d.metamodel + "\"", d.id);
        }
        if (d.binding.kind == BindingKind::Unbound) {
            error("unbound", "data node \"" + d.id + "\" has no binding", d.id);
            continue;
        }
        if (d.binding.kind != BindingKind::LaunchParameter) {
            if (chain.writers(d.id).empty() && !chain.readers(d.id).empty()) {
                error("unwritten", "data node \"" + d.id + "\" is read but never written", d.id);
            }
            continue;
        }
        params.insert(d.binding.value);
        if (d.parameter_direction != Direction::In) continue;
        auto b = launch.bindings.find(d.binding.value);
        if (b == launch.bindings.end()) {
            error("missing-binding", "input parameter \"" + d.binding.value + "\" is not bound in the launch config",
                  d.id);
            continue;
        }
        auto path = mgm.absolute_path(mgm.relative_location(b->second));
        std::error_code ec;
        if (!fs::is_regular_file(path, ec)) {
            error("missing-file", "parameter \"" + d.binding.value + "\" is bound to missing file " + b->second, d.id);
            continue;
        }
        auto id = mgm.find_by_location(ResourceKind::ModelInstance, mgm.relative_location(path));
        if (!id) {
            error("unregistered-input", "file " + b->second + " bound to \"" + d.binding.value +
                                            "\" is not a registered model instance",
                  d.id);
            continue;
        }
        auto actual = metamodel_name(mgm, mgm.at(*id));
        if (actual != d.metamodel) {
            error("conformance-mismatch", "conformance mismatch: \"" + d.binding.value + "\" expects \"" + d.metamodel +
                                              "\" but " + b->second + " conforms to \"" + actual + "\"",
                  d.id);
        }
    }
    for (const auto& [name, path] : launch.bindings) {
        if (!params.count(name)) {
            out.push_back({Severity::Warning, "unused-binding", "launch binding \"" + name + "\" names no parameter",
                           name, {}});
        }
    }

    for (const auto& e : chain.data_edges) {
        const auto* step = chain.find_step(e.step);
        const auto* node = chain.find_data_node(e.data_node);
        if (!step || !node) {
            error("dangling", "data edge " + e.data_node + " / " + e.step + "." + e.pin + " has an unknown endpoint",
                  e.step);
            continue;
        }
        const auto& pins = e.direction == Direction::In ? step->in_pins : step->out_pins;
        auto pin = std::find_if(pins.begin(), pins.end(), [&](const PinSignature& p) { return p.name == e.pin; });
        if (pin == pins.end()) {
            error("dangling", "step \"" + e.step + "\" has no pin \"" + e.pin + "\"", e.step);
        } else if (pin->metamodel != node->metamodel) {
            error("metamodel-mismatch", "conformance mismatch on " + e.step + "." + e.pin + ": pin is \"" +
                                            pin->metamodel + "\", data node \"" + node->id + "\" is \"" +
                                            node->metamodel + "\"",
                  e.step);
        }
    }
    for (const auto& s : chain.steps) {
        for (auto dir : {Direction::In, Direction::Out}) {
            for (const auto& p : dir == Direction::In ? s.in_pins : s.out_pins) {
                auto n = std::count_if(chain.data_edges.begin(), chain.data_edges.end(), [&](const DataEdge& e) {
                    return e.step == s.id && e.pin == p.name && e.direction == dir;
                });
                if (n != 1) {
                    error("pin-arity", "pin " + s.id + "." + p.name + " is connected to " + std::to_string(n) +
                                           " data nodes",
                          s.id);
                }
            }
        }
    }

    ControlGraph cg;
    try {
        cg = control_graph(chain);
    } catch (const Error& e) {
        error("dangling", e.what(), {});
        return out;
    }
    if (!graph::is_acyclic(cg.g)) {
        for (auto v : graph::cyclic_vertices(cg.g)) error("cycle", "\"" + cg.ids[v] + "\" lies on a cycle", cg.ids[v]);
        return out;
    }

    auto reach = graph::transitive_closure(cg.g);
    auto serial = cg.g;
    for (const auto& d : chain.data_nodes) {
        auto ws = chain.writers(d.id);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            for (std::size_t j = i + 1; j < ws.size(); ++j) {
                auto a = cg.index.at(ws[i]);
                auto b = cg.index.at(ws[j]);
                if (reach[a][b] || reach[b][a]) continue;
                out.push_back({Severity::Warning, "writer-conflict",
                               "writer conflict, will serialize: \"" + ws[i] + "\" and \"" + ws[j] + "\" both write \"" +
                                   d.id + "\"",
                               d.id, {}});
                serial.add_edge(a, b);
            }
        }
    }
    if (!graph::is_acyclic(serial)) {
        error("serialization-cycle", "serializing concurrent writers would deadlock", {});
    }
    return out;
}

std::string export_dot(const TransformationChain& chain) {
    std::ostringstream os;
    os << "digraph " << dot_quote(chain.name) << " {\n";
    os << "  rankdir=LR;\n";
    for (const auto& s : chain.steps) {
        os << "  " << dot_quote(s.id) << " [shape=box, label=" << dot_quote(s.id + "\\n[" + s.handler_kind + "]")
           << "];\n";
    }
    for (const auto& g : chain.gateways) {
        os << "  " << dot_quote(g.id) << " [shape=box, style=filled, fillcolor=black, height=0.1, width=0.8, label=\"\""
           << ", xlabel=" << dot_quote(g.id) << "];\n";
    }
    for (const auto& d : chain.data_nodes) {
        os << "  " << dot_quote("data:" + d.id) << " [shape=ellipse, label=" << dot_quote(d.id + "\\n: " + d.metamodel)
           << "];\n";
    }
    for (const auto& [from, to] : chain.control_edges) os << "  " << dot_quote(from) << " -> " << dot_quote(to) << ";\n";
    for (const auto& e : chain.data_edges) {
        auto data = dot_quote("data:" + e.data_node);
        auto step = dot_quote(e.step);
        if (e.direction == Direction::In) {
            os << "  " << data << " -> " << step;
        } else {
            os << "  " << step << " -> " << data;
        }
        os << " [style=dashed, label=" << dot_quote(e.pin) << "];\n";
    }
    os << "}\n";
    return os.str();
}

fs::path chain_store_path(const fs::path& workspace_root, std::string_view pm_name) {
    return workspace_root / ".maple" / "chains" / (std::string(pm_name) + ".chain.json");
}

std::string chain_to_json(const TransformationChain& chain) {
    auto pins = [](const std::vector<PinSignature>& ps) {
        Json a = Json::array();
        for (const auto& p : ps) a.push_back(Json{{"name", p.name}, {"metamodel", p.metamodel}});
        return a;
    };
    Json doc = Json::object();
    doc["version"] = kChainVersion;
    doc["name"] = chain.name;
    Json steps = Json::array();
    for (const auto& s : chain.steps) {
        steps.push_back(Json{{"id", s.id},
                             {"impl", s.impl.value},
                             {"handlerKind", s.handler_kind},
                             {"in", pins(s.in_pins)},
                             {"out", pins(s.out_pins)}});
    }
    doc["steps"] = std::move(steps);
    Json nodes = Json::array();
    for (const auto& d : chain.data_nodes) {
        Json j{{"id", d.id},
               {"metamodel", d.metamodel},
               {"binding", Json{{"kind", to_string(d.binding.kind)}, {"value", d.binding.value}}}};
        if (d.parameter_direction) j["direction"] = to_string(*d.parameter_direction);
        nodes.push_back(std::move(j));
    }
    doc["dataNodes"] = std::move(nodes);
    Json gateways = Json::array();
    for (const auto& g : chain.gateways) {
        gateways.push_back(
            Json{{"id", g.id}, {"kind", g.kind == GatewayKind::Fork ? "Fork" : "Join"}, {"synthesized", g.synthesized}});
    }
    doc["gateways"] = std::move(gateways);
    Json control = Json::array();
    for (const auto& [from, to] : chain.control_edges) control.push_back(Json::array({from, to}));
    doc["controlEdges"] = std::move(control);
    Json data = Json::array();
    for (const auto& e : chain.data_edges) {
        data.push_back(
            Json{{"dataNode", e.data_node}, {"step", e.step}, {"pin", e.pin}, {"direction", to_string(e.direction)}});
    }
    doc["dataEdges"] = std::move(data);
    return dump_json(doc);
}

TransformationChain chain_from_json(std::string_view text) {
    constexpr auto kCode = ErrorCode::MalformedStore;
    auto doc = parse_json(text, kCode, "chain store");
    auto array = [&](const Json& j, const char* key, const std::string& ctx) -> const Json& {
        const auto& a = require_member(j, key, kCode, ctx);
        if (!a.is_array()) throw Error(kCode, ctx + ": " + key + " must be an array");
        return a;
    };
    auto direction = [&](const std::string& text, const std::string& ctx) {
        auto d = parse_direction(text);
        if (!d) throw Error(kCode, ctx + ": bad direction \"" + text + "\"");
        return *d;
    };
    const auto& version = require_member(doc, "version", kCode, "chain store");
    if (!version.is_number_integer() || version.get<int>() != kChainVersion) {
        throw Error(kCode, "chain store: unsupported version " + version.dump());
    }

    TransformationChain chain;
    chain.name = require_string(doc, "name", kCode, "chain store");
    const auto& steps = array(doc, "steps", "chain store");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto ctx = "chain store: steps[" + std::to_string(i) + "]";
        const auto& j = steps[i];
        Step s;
        s.id = require_string(j, "id", kCode, ctx);
        s.impl = ResourceId{require_string(j, "impl", kCode, ctx)};
        s.handler_kind = require_string(j, "handlerKind", kCode, ctx);
        for (auto [key, target] : {std::pair{"in", &s.in_pins}, std::pair{"out", &s.out_pins}}) {
            for (const auto& p : array(j, key, ctx)) {
                target->push_back({require_string(p, "name", kCode, ctx), require_string(p, "metamodel", kCode, ctx)});
            }
        }
        chain.steps.push_back(std::move(s));
    }
    const auto& nodes = array(doc, "dataNodes", "chain store");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto ctx = "chain store: dataNodes[" + std::to_string(i) + "]";
        const auto& j = nodes[i];
        DataNode d;
        d.id = require_string(j, "id", kCode, ctx);
        d.metamodel = require_string(j, "metamodel", kCode, ctx);
        const auto& b = require_member(j, "binding", kCode, ctx);
        auto kind = require_string(b, "kind", kCode, ctx + ".binding");
        auto it = std::find_if(std::begin(kBindingNames), std::end(kBindingNames),
                               [&](const auto& entry) { return entry.second == kind; });
        if (it == std::end(kBindingNames)) throw Error(kCode, ctx + ": unknown binding kind \"" + kind + "\"");
        d.binding = {it->first, require_string(b, "value", kCode, ctx + ".binding")};
        if (j.contains("direction")) d.parameter_direction = direction(require_string(j, "direction", kCode, ctx), ctx);
        chain.data_nodes.push_back(std::move(d));
    }
    const auto& gateways = array(doc, "gateways", "chain store");
    for (std::size_t i = 0; i < gateways.size(); ++i) {
        auto ctx = "chain store: gateways[" + std::to_string(i) + "]";
        const auto& j = gateways[i];
        Gateway g;
        g.id = require_string(j, "id", kCode, ctx);
        auto kind = require_string(j, "kind", kCode, ctx);
        if (kind != "Fork" && kind != "Join") throw Error(kCode, ctx + ": unknown gateway kind \"" + kind + "\"");
        g.kind = kind == "Fork" ? GatewayKind::Fork : GatewayKind::Join;
        const auto& synth = require_member(j, "synthesized", kCode, ctx);
        if (!synth.is_boolean()) throw Error(kCode, ctx + ": synthesized must be a boolean");
        g.synthesized = synth.get<bool>();
        chain.gateways.push_back(std::move(g));
    }
    for (const auto& e : array(doc, "controlEdges", "chain store")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
            throw Error(kCode, "chain store: control edges are [from, to] string pairs");
        }
        chain.control_edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    const auto& data = array(doc, "dataEdges", "chain store");
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto ctx = "chain store: dataEdges[" + std::to_string(i) + "]";
        const auto& j = data[i];
        chain.data_edges.push_back({require_string(j, "dataNode", kCode, ctx), require_string(j, "step", kCode, ctx),
                                    require_string(j, "pin", kCode, ctx),
                                    direction(require_string(j, "direction", kCode, ctx), ctx)});
    }
    return chain;
}

void save_chain(const TransformationChain& chain, const fs::path& path) { write_text_file(path, chain_to_json(chain)); }

TransformationChain load_chain(const fs::path& path) { return chain_from_json(read_text_file(path)); }

}  // namespace maple
