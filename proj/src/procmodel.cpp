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

#include "maple/procmodel.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "maple/graph.hpp"
#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple {

namespace {

constexpr std::pair<NodeKind, std::string_view> kNodeKindNames[] = {
    {NodeKind::Initial, "initial"}, {NodeKind::Final, "final"},   {NodeKind::Action, "action"},
    {NodeKind::CallActivity, "call"}, {NodeKind::Fork, "fork"},   {NodeKind::Join, "join"},
    {NodeKind::ObjectNode, "object"},
};

/// Position of the n-th (0-based) occurrence of `"needle"`.
SourcePos nth_quoted(std::string_view text, std::string_view needle, std::size_t n) {
    std::string quoted = "\"" + std::string(needle) + "\"";
    std::size_t at = 0;
    for (std::size_t i = 0;; ++i) {
        at = text.find(quoted, at);
        if (at == std::string_view::npos) return {};
        if (i == n) return position_of(text, at);
        at += quoted.size();
    }
}

void check_name(std::string_view text, const std::string& name, std::string_view what) {
    if (name.empty()) throw Error(ErrorCode::SyntaxError, std::string(what) + " with empty name");
    if (name.find('.') != std::string::npos) {
        throw Error(ErrorCode::SyntaxError, std::string(what) + " \"" + name + "\" may not contain '.'",
                    nth_quoted(text, name, 0));
    }
}

Pin parse_pin(std::string_view text, const Json& j, const std::string& ctx) {
    constexpr auto kCode = ErrorCode::SyntaxError;
    Pin p;
    p.name = require_string(j, "name", kCode, ctx);
    check_name(text, p.name, "pin");
    auto dir = parse_direction(require_string(j, "direction", kCode, ctx));
    if (!dir) throw Error(kCode, ctx + ": direction must be \"in\" or \"out\"", nth_quoted(text, p.name, 0));
    p.direction = *dir;
    p.metamodel = optional_string(j, "metamodel", kCode, ctx);
    return p;
}

std::vector<Pin> parse_pins(std::string_view text, const Json& parent, std::string_view key, const std::string& ctx) {
    std::vector<Pin> pins;
    auto it = parent.find(key);
    if (it == parent.end() || it->is_null()) return pins;
    if (!it->is_array()) throw Error(ErrorCode::SyntaxError, ctx + ": \"" + std::string(key) + "\" must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
        pins.push_back(parse_pin(text, (*it)[i], ctx + "." + std::string(key) + "[" + std::to_string(i) + "]"));
    }
    return pins;
}

Json pin_to_json(const Pin& p) {
    return Json{{"name", p.name}, {"direction", to_string(p.direction)}, {"metamodel", p.metamodel}};
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::In ? "in" : "out"; }

std::optional<Direction> parse_direction(std::string_view text) {
    if (text == "in") return Direction::In;
    if (text == "out") return Direction::Out;
    return std::nullopt;
}

std::string_view to_string(NodeKind kind) {
    for (auto [k, name] : kNodeKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
    for (auto [k, name] : kNodeKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

const Pin* Node::find_pin(std::string_view pin, Direction direction) const {
    for (const auto& p : pins) {
        if (p.name == pin && p.direction == direction) return &p;
    }
    return nullptr;
}

EndpointRef split_endpoint(std::string_view ref) {
    auto dot = ref.find('.');
    if (dot == std::string_view::npos) return {std::string(ref), {}};
    return {std::string(ref.substr(0, dot)), std::string(ref.substr(dot + 1))};
}

const Node* ProcessModel::find_node(std::string_view node) const {
    for (const auto& n : nodes) {
        if (n.name == node) return &n;
    }
    return nullptr;
}

const Pin* ProcessModel::find_parameter(std::string_view param) const {
    for (const auto& p : parameters) {
        if (p.name == param) return &p;
    }
    return nullptr;
}

std::size_t line_of_quoted(std::string_view text, std::string_view needle) {
    return nth_quoted(text, needle, 0).line;
}

ProcessModel parse_pm(std::string_view text) {
    constexpr auto kCode = ErrorCode::SyntaxError;
    auto doc = parse_json(text, kCode, "process model");
    if (!doc.is_object()) throw Error(kCode, "process model: top level must be an object", {1, 1});

    ProcessModel pm;
    pm.name = require_string(doc, "name", kCode, "process model");
    check_name(text, pm.name, "process model");
    pm.parameters = parse_pins(text, doc, "parameters", "parameters");

    const auto& nodes = require_member(doc, "nodes", kCode, "process model");
    if (!nodes.is_array()) throw Error(kCode, "process model: \"nodes\" must be an array");
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& j = nodes[i];
        auto ctx = "nodes[" + std::to_string(i) + "]";
        Node n;
        n.name = require_string(j, "name", kCode, ctx);
        check_name(text, n.name, "node");
        auto kind_text = require_string(j, "kind", kCode, ctx);
        auto kind = parse_node_kind(kind_text);
        if (!kind) {
            throw Error(kCode, ctx + ": unknown node kind \"" + kind_text + "\"", nth_quoted(text, kind_text, 0));
        }
        n.kind = *kind;
        n.impl = optional_string(j, "impl", kCode, ctx);
        n.callee = optional_string(j, "callee", kCode, ctx);
        n.metamodel = optional_string(j, "metamodel", kCode, ctx);
        n.pins = parse_pins(text, j, "pins", ctx);
        if (auto [it, fresh] = seen.emplace(n.name, 0); !fresh) {
            // Second occurrence of the quoted name is the duplicate definition
            // unless edges mention it first; good enough for a diagnostic.
            throw Error(ErrorCode::DuplicateNodeName, "duplicate node name \"" + n.name + "\"",
                        nth_quoted(text, n.name, 1));
        }
        pm.nodes.push_back(std::move(n));
    }

    if (auto it = doc.find("edges"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) throw Error(kCode, "process model: \"edges\" must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& j = (*it)[i];
            auto ctx = "edges[" + std::to_string(i) + "]";
            Edge e;
            auto kind = require_string(j, "kind", kCode, ctx);
            if (kind == "control") {
                e.kind = EdgeKind::ControlFlow;
            } else if (kind == "object") {
                e.kind = EdgeKind::ObjectFlow;
            } else {
                throw Error(kCode, ctx + ": edge kind must be \"control\" or \"object\"");
            }
            e.source = require_string(j, "source", kCode, ctx);
            e.target = require_string(j, "target", kCode, ctx);
            e.name = optional_string(j, "name", kCode, ctx);
            pm.edges.push_back(std::move(e));
        }
    }

    if (auto it = doc.find("calls"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) throw Error(kCode, "process model: \"calls\" must be an array");
        for (const auto& c : *it) {
            if (!c.is_string()) throw Error(kCode, "process model: \"calls\" entries must be strings");
            pm.calls.push_back(c.get<std::string>());
        }
    }
    return pm;
}

ProcessModel load_pm(const fs::path& path) {
    auto text = read_text_file(path);
    try {
        return parse_pm(text);
    } catch (const Error& e) {
        throw Error(e.code(), path.generic_string() + ": " + e.what(), e.pos());
    }
}

std::string print_pm(const ProcessModel& pm) {
    Json doc = Json::object();
    doc["name"] = pm.name;
    Json params = Json::array();
    for (const auto& p : pm.parameters) params.push_back(pin_to_json(p));
    doc["parameters"] = std::move(params);
    Json nodes = Json::array();
    for (const auto& n : pm.nodes) {
        Json j = Json::object();
        j["name"] = n.name;
        j["kind"] = to_string(n.kind);
        if (!n.impl.empty()) j["impl"] = n.impl;
        if (!n.callee.empty()) j["callee"] = n.callee;
        if (!n.metamodel.empty()) j["metamodel"] = n.metamodel;
        if (!n.pins.empty()) {
            Json pins = Json::array();
            for (const auto& p : n.pins) pins.push_back(pin_to_json(p));
            j["pins"] = std::move(pins);
        }
        nodes.push_back(std::move(j));
    }
    doc["nodes"] = std::move(nodes);
    Json edges = Json::array();
    for (const auto& e : pm.edges) {
        Json j = Json::object();
        j["kind"] = e.kind == EdgeKind::ControlFlow ? "control" : "object";
        j["source"] = e.source;
        j["target"] = e.target;
        if (!e.name.empty()) j["name"] = e.name;
        edges.push_back(std::move(j));
    }
    doc["edges"] = std::move(edges);
    doc["calls"] = pm.calls;
    return dump_json(doc);
}

namespace {

class Validator {
public:
    explicit Validator(const ProcessModel& pm) : pm_(pm) {
        for (std::size_t i = 0; i < pm.nodes.size(); ++i) index_[pm.nodes[i].name] = i;
    }

    std::vector<Diagnostic> run() {
        check_nodes();
        check_parameters();
        check_edges();
        check_pin_connectivity();
        check_gateways();
        check_graph();
        return std::move(diags_);
    }

private:
    /// A resolved object-flow endpoint.
    struct DataEnd {
        enum class Kind { Pin, ObjectNode, Parameter } kind;
        std::string node;  // node name (Pin/ObjectNode) or parameter name
        const Pin* pin = nullptr;
        std::string metamodel;
    };

    void error(std::string code, std::string message, std::string element) {
        diags_.push_back({Severity::Error, std::move(code), std::move(message), std::move(element)});
    }
    void warning(std::string code, std::string message, std::string element) {
        diags_.push_back({Severity::Warning, std::move(code), std::move(message), std::move(element)});
    }

    void check_nodes() {
        std::size_t initials = 0, finals = 0;
        std::set<std::string> names;
        for (const auto& n : pm_.nodes) {
            if (!names.insert(n.name).second) error("duplicate-node", "duplicate node name \"" + n.name + "\"", n.name);
            switch (n.kind) {
                case NodeKind::Initial: ++initials; break;
                case NodeKind::Final: ++finals; break;
                case NodeKind::Action:
                    if (n.impl.empty()) error("missing-impl", "action \"" + n.name + "\" has no impl", n.name);
                    break;
                case NodeKind::CallActivity:
                    if (n.callee.empty()) {
                        error("missing-callee", "call activity \"" + n.name + "\" has no callee", n.name);
                    } else if (std::find(pm_.calls.begin(), pm_.calls.end(), n.callee) == pm_.calls.end()) {
                        error("undeclared-callee",
                              "call activity \"" + n.name + "\" calls \"" + n.callee + "\" which is not listed in calls",
                              n.name);
                    }
                    break;
                case NodeKind::ObjectNode:
                    if (n.metamodel.empty()) {
                        error("missing-metamodel", "object node \"" + n.name + "\" has no metamodel", n.name);
                    }
                    break;
                case NodeKind::Fork:
                case NodeKind::Join:
                    break;
            }
            if (!n.is_executable() && !n.pins.empty()) {
                error("unexpected-pins", "node \"" + n.name + "\" of kind " + std::string(to_string(n.kind)) +
                                             " cannot carry pins", n.name);
            }
            if (n.kind != NodeKind::Action && !n.impl.empty()) {
                error("unexpected-impl", "only actions carry an impl (\"" + n.name + "\")", n.name);
            }
            std::set<std::pair<std::string, Direction>> pin_keys;
            for (const auto& p : n.pins) {
                if (!pin_keys.emplace(p.name, p.direction).second) {
                    error("duplicate-pin", "node \"" + n.name + "\" declares " + std::string(to_string(p.direction)) +
                                               "-pin \"" + p.name + "\" twice", n.name);
                }
                if (p.metamodel.empty()) {
                    error("missing-metamodel", "pin \"" + n.name + "." + p.name + "\" has no metamodel", n.name);
                }
            }
        }
        if (initials != 1) {
            error("initial-count", "expected exactly one initial node, found " + std::to_string(initials), "");
        }
        if (finals < 1) error("final-count", "expected at least one final node", "");
    }

    void check_parameters() {
        std::set<std::string> names;
        for (const auto& p : pm_.parameters) {
            if (!names.insert(p.name).second) error("duplicate-parameter", "duplicate parameter \"" + p.name + "\"", p.name);
            if (index_.count(p.name)) {
                error("name-clash", "parameter \"" + p.name + "\" has the same name as a node", p.name);
            }
            if (p.metamodel.empty()) error("missing-metamodel", "parameter \"" + p.name + "\" has no metamodel", p.name);
        }
    }

    std::optional<DataEnd> resolve_data_end(const std::string& ref, bool as_source) {
        auto ep = split_endpoint(ref);
        if (ep.has_pin()) {
            const Node* n = pm_.find_node(ep.node);
            if (!n) {
                error("unknown-reference", "object flow references unknown node \"" + ep.node + "\"", ref);
                return std::nullopt;
            }
            if (!n->is_executable()) {
                error("bad-endpoint", "pins belong to actions and call activities, not \"" + ep.node + "\"", ref);
                return std::nullopt;
            }
            auto dir = as_source ? Direction::Out : Direction::In;
            const Pin* p = n->find_pin(ep.pin, dir);
            if (!p) {
                error("unknown-reference",
                      "node \"" + ep.node + "\" has no " + std::string(to_string(dir)) + "-pin \"" + ep.pin + "\"", ref);
                return std::nullopt;
            }
            return DataEnd{DataEnd::Kind::Pin, n->name, p, p->metamodel};
        }
        if (const Node* n = pm_.find_node(ep.node)) {
            if (n->kind != NodeKind::ObjectNode) {
                error("bad-endpoint", "object flow endpoint \"" + ref + "\" must be a pin, object node or parameter", ref);
                return std::nullopt;
            }
            return DataEnd{DataEnd::Kind::ObjectNode, n->name, nullptr, n->metamodel};
        }
        if (const Pin* p = pm_.find_parameter(ep.node)) {
            if (!as_source && p->direction == Direction::In) {
                error("bad-endpoint", "input parameter \"" + p->name + "\" cannot be written", ref);
                return std::nullopt;
            }
            return DataEnd{DataEnd::Kind::Parameter, p->name, p, p->metamodel};
        }
        error("unknown-reference", "object flow references unknown element \"" + ref + "\"", ref);
        return std::nullopt;
    }

    void check_edges() {
        for (const auto& e : pm_.edges) {
            auto label = e.source + " -> " + e.target;
            if (e.kind == EdgeKind::ControlFlow) {
                const Node* s = pm_.find_node(e.source);
                const Node* t = pm_.find_node(e.target);
                if (!s || !t) {
                    error("unknown-reference", "control flow " + label + " references an unknown node",
                          !s ? e.source : e.target);
                    continue;
                }
                if (s->kind == NodeKind::ObjectNode || t->kind == NodeKind::ObjectNode) {
                    error("bad-endpoint", "control flow " + label + " touches an object node", e.source);
                    continue;
                }
                if (s == t) {
                    error("self-loop", "control flow " + label + " is a self-loop", e.source);
                    continue;
                }
                if (s->kind == NodeKind::Final) error("bad-endpoint", "final node \"" + s->name + "\" has an outgoing flow", s->name);
                if (t->kind == NodeKind::Initial) {
                    error("bad-endpoint", "initial node \"" + t->name + "\" has an incoming flow", t->name);
                }
                control_.emplace_back(s->name, t->name);
                continue;
            }
            auto src = resolve_data_end(e.source, true);
            auto dst = resolve_data_end(e.target, false);
            if (!src || !dst) continue;
            if (src->kind != DataEnd::Kind::Pin && dst->kind != DataEnd::Kind::Pin) {
                error("bad-endpoint", "object flow " + label + " must start or end at a pin", e.source);
                continue;
            }
            if (src->kind == DataEnd::Kind::Pin && dst->kind == DataEnd::Kind::Pin && src->node == dst->node) {
                error("self-loop", "object flow " + label + " is a self-loop", e.source);
                continue;
            }
            if (src->metamodel != dst->metamodel) {
                error("pin-metamodel-mismatch",
                      "pin metamodel mismatch on " + label + ": " + src->metamodel + " vs " + dst->metamodel, e.source);
            }
            if (src->kind == DataEnd::Kind::Pin) out_pin_flows_[{src->node, src->pin->name}]++;
            if (dst->kind == DataEnd::Kind::Pin) in_pin_flows_[{dst->node, dst->pin->name}]++;
            if (dst->kind != DataEnd::Kind::Pin) carrier_writers_[dst->node]++;
            if (src->kind != DataEnd::Kind::Pin) carrier_readers_[src->node]++;
            // Parameters are not graph nodes: their writers precede their readers.
            if (src->kind != DataEnd::Kind::Parameter && dst->kind != DataEnd::Kind::Parameter) {
                data_.emplace_back(src->node, dst->node);
            } else if (dst->kind == DataEnd::Kind::Parameter) {
                param_writers_[dst->node].push_back(src->node);
            } else {
                param_readers_[src->node].push_back(dst->node);
            }
        }
    }

    void check_pin_connectivity() {
        for (const auto& n : pm_.nodes) {
            for (const auto& p : n.pins) {
                auto& flows = p.direction == Direction::In ? in_pin_flows_ : out_pin_flows_;
                auto it = flows.find({n.name, p.name});
                std::size_t count = it == flows.end() ? 0 : it->second;
                auto ref = n.name + "." + p.name;
                if (count == 0) {
                    error("unconnected-pin", std::string(to_string(p.direction)) + "-pin \"" + ref + "\" has no object flow",
                          ref);
                } else if (count > 1) {
                    error("pin-fan", std::string(to_string(p.direction)) + "-pin \"" + ref +
                                         "\" has more than one object flow; route through an object node",
                          ref);
                }
            }
            if (n.kind == NodeKind::ObjectNode && !carrier_writers_.count(n.name)) {
                error("unwritten-object", "object node \"" + n.name + "\" is never written", n.name);
            }
        }
        for (const auto& p : pm_.parameters) {
            if (p.direction == Direction::Out && !carrier_writers_.count(p.name)) {
                error("unwritten-parameter", "output parameter \"" + p.name + "\" is never written", p.name);
            }
            if (p.direction == Direction::In && !carrier_readers_.count(p.name)) {
                warning("unused-parameter", "input parameter \"" + p.name + "\" is never read", p.name);
            }
        }
    }

    void check_gateways() {
        std::map<std::string, std::size_t> in, out;
        for (const auto& [s, t] : control_) {
            out[s]++;
            in[t]++;
        }
        for (const auto& n : pm_.nodes) {
            auto i = in[n.name], o = out[n.name];
            if (n.kind == NodeKind::Fork && (i != 1 || o < 2)) {
                error("fork-degree", "fork \"" + n.name + "\" needs 1 incoming and at least 2 outgoing control flows", n.name);
            }
            if (n.kind == NodeKind::Join && (i < 2 || o != 1)) {
                error("join-degree", "join \"" + n.name + "\" needs at least 2 incoming and 1 outgoing control flow", n.name);
            }
            if (n.kind == NodeKind::Initial && o == 0) {
                error("initial-degree", "initial node \"" + n.name + "\" has no outgoing control flow", n.name);
            }
            if (n.kind == NodeKind::Final && i == 0) {
                error("final-degree", "final node \"" + n.name + "\" has no incoming control flow", n.name);
            }
        }
    }

    void check_graph() {
        graph::Digraph g(pm_.nodes.size());
        for (const auto& [s, t] : control_) g.add_edge(index_.at(s), index_.at(t));
        for (const auto& [s, t] : data_) g.add_edge(index_.at(s), index_.at(t));
        for (const auto& [param, writers] : param_writers_) {
            auto readers = param_readers_.find(param);
            if (readers == param_readers_.end()) continue;
            for (const auto& w : writers) {
                for (const auto& r : readers->second) g.add_edge(index_.at(w), index_.at(r));
            }
        }

        auto cyclic = graph::cyclic_vertices(g);
        if (!cyclic.empty()) {
            std::string members;
            for (auto v : cyclic) members += (members.empty() ? "" : ", ") + pm_.nodes[v].name;
            error("cycle", "cycle through " + members, pm_.nodes[cyclic.front()].name);
        }

        std::vector<char> seen(pm_.nodes.size(), 0);
        std::vector<std::size_t> stack;
        for (std::size_t v = 0; v < pm_.nodes.size(); ++v) {
            if (pm_.nodes[v].kind == NodeKind::Initial) {
                stack.push_back(v);
                seen[v] = 1;
            }
        }
        if (stack.empty()) return;
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (auto w : g.successors(v)) {
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
        for (std::size_t v = 0; v < pm_.nodes.size(); ++v) {
            if (!seen[v]) {
                error("unreachable", "node \"" + pm_.nodes[v].name + "\" is not reachable from the initial node",
                      pm_.nodes[v].name);
            }
        }
    }

    const ProcessModel& pm_;
    std::map<std::string, std::size_t> index_;
    std::vector<Diagnostic> diags_;
    std::vector<std::pair<std::string, std::string>> control_;
    std::vector<std::pair<std::string, std::string>> data_;
    std::map<std::pair<std::string, std::string>, std::size_t> in_pin_flows_;
    std::map<std::pair<std::string, std::string>, std::size_t> out_pin_flows_;
    std::map<std::string, std::size_t> carrier_writers_;
    std::map<std::string, std::size_t> carrier_readers_;
    std::map<std::string, std::vector<std::string>> param_writers_;
    std::map<std::string, std::vector<std::string>> param_readers_;
};

void require_valid(const ProcessModel& pm) {
    auto diags = validate_pm(pm);
    for (const auto& d : diags) {
        if (d.severity == Severity::Error) {
            throw Error(ErrorCode::ValidationFailed, "process model \"" + pm.name + "\": " + d.message);
        }
    }
}

}  // namespace

std::vector<Diagnostic> validate_pm(const ProcessModel& pm) { return Validator(pm).run(); }

const ProcessModel& ResolvedProcessModel::model(std::string_view name) const {
    if (root && root->name == name) return *root;
    auto it = callees.find(std::string(name));
    if (it == callees.end()) throw Error(ErrorCode::UnknownCallee, "unknown process model \"" + std::string(name) + "\"");
    return *it->second;
}

std::size_t ResolvedProcessModel::call_depth() const {
    std::function<std::size_t(const ProcessModel&)> depth = [&](const ProcessModel& pm) -> std::size_t {
        std::size_t best = 0;
        for (const auto& n : pm.nodes) {
            if (n.kind == NodeKind::CallActivity) best = std::max(best, 1 + depth(model(n.callee)));
        }
        return best;
    };
    return root ? depth(*root) : 0;
}

ResolvedProcessModel resolve_calls(const ProcessModel& pm, const std::map<std::string, ProcessModel>& library) {
    require_valid(pm);
    ResolvedProcessModel resolved;
    resolved.root = std::make_shared<const ProcessModel>(pm);

    std::vector<std::string> stack{pm.name};
    std::function<void(const ProcessModel&)> visit = [&](const ProcessModel& caller) {
        for (const auto& site : caller.nodes) {
            if (site.kind != NodeKind::CallActivity) continue;
            if (std::find(stack.begin(), stack.end(), site.callee) != stack.end()) {
                std::string path;
                for (const auto& s : stack) path += s + " -> ";
                throw Error(ErrorCode::RecursiveCall, "recursive call: " + path + site.callee);
            }
            auto lib = library.find(site.callee);
            if (lib == library.end()) {
                throw Error(ErrorCode::UnknownCallee,
                            "\"" + caller.name + "." + site.name + "\" calls unknown process model \"" + site.callee + "\"");
            }
            const ProcessModel& callee = lib->second;
            if (callee.parameters.size() != site.pins.size()) {
                throw Error(ErrorCode::ParameterMismatch,
                            "\"" + caller.name + "." + site.name + "\" has " + std::to_string(site.pins.size()) +
                                " pins but \"" + callee.name + "\" declares " + std::to_string(callee.parameters.size()) +
                                " parameters");
            }
            for (const auto& param : callee.parameters) {
                const Pin* pin = site.find_pin(param.name, param.direction);
                if (!pin) {
                    throw Error(ErrorCode::ParameterMismatch, "\"" + caller.name + "." + site.name + "\" lacks " +
                                                                  std::string(to_string(param.direction)) + "-pin \"" +
                                                                  param.name + "\" required by \"" + callee.name + "\"");
                }
                if (pin->metamodel != param.metamodel) {
                    throw Error(ErrorCode::ParameterMismatch,
                                "\"" + caller.name + "." + site.name + "." + pin->name + "\" has metamodel " +
                                    pin->metamodel + " but \"" + callee.name + "\" expects " + param.metamodel);
                }
            }
            if (!resolved.callees.count(callee.name)) {
                require_valid(callee);
                resolved.callees.emplace(callee.name, std::make_shared<const ProcessModel>(callee));
            }
            stack.push_back(callee.name);
            visit(callee);
            stack.pop_back();
        }
    };
    visit(pm);
    return resolved;
}

std::map<std::string, LibraryEntry> scan_pm_library(const fs::path& dir, std::vector<Diagnostic>* problems) {
    std::map<std::string, LibraryEntry> library;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return library;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 8 && name.ends_with(".pm.json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            auto pm = load_pm(f);
            auto name = pm.name;
            library.emplace(std::move(name), LibraryEntry{f, std::move(pm)});
        } catch (const Error& e) {
            if (!problems) throw;
            problems->push_back({Severity::Warning, std::string(to_string(e.code())), e.what(), f.generic_string(), e.pos()});
        }
    }
    return library;
}

std::map<std::string, ProcessModel> load_pm_library(const fs::path& dir) {
    std::map<std::string, ProcessModel> library;
    for (auto& [name, entry] : scan_pm_library(dir)) library.emplace(name, std::move(entry.model));
    return library;
}

}  // namespace maple
