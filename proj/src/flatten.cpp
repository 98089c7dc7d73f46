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

#include "maple/flatten.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace maple {

std::optional<std::size_t> FlatGraph::node_index(std::string_view id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> FlatGraph::carrier_index(std::string_view id) const {
    for (std::size_t i = 0; i < carriers.size(); ++i) {
        if (carriers[i].id == id) return i;
    }
    return std::nullopt;
}

std::vector<std::size_t> FlatGraph::writers(std::size_t carrier) const {
    std::vector<std::size_t> out;
    for (const auto& b : bindings) {
        if (b.carrier == carrier && b.direction == Direction::Out) out.push_back(b.node);
    }
    return out;
}

std::vector<std::size_t> FlatGraph::readers(std::size_t carrier) const {
    std::vector<std::size_t> out;
    for (const auto& b : bindings) {
        if (b.carrier == carrier && b.direction == Direction::In) out.push_back(b.node);
    }
    return out;
}

graph::Digraph FlatGraph::precedence() const {
    graph::Digraph g = control;
    for (std::size_t c = 0; c < carriers.size(); ++c) {
        for (auto w : writers(c)) {
            for (auto r : readers(c)) {
                if (w != r) g.add_edge(w, r);
            }
        }
    }
    return g;
}

namespace {

class Inliner {
public:
    explicit Inliner(const ResolvedProcessModel& rpm) : rpm_(rpm) {}

    FlatGraph run() {
        const auto& root = *rpm_.root;
        out_.name = root.name;
        std::map<std::string, std::size_t> params;
        for (const auto& p : root.parameters) {
            params[p.name] = add_carrier({p.name, root.name + "." + p.name, CarrierKind::Parameter, p.metamodel,
                                          p.direction});
        }
        inline_scope(root, "", root.name, params);

        for (std::size_t v = 0; v < g_.size(); ++v) {
            if (!vertex_node_[v]) graph::bypass_vertex(g_, v);
        }
        out_.control = graph::Digraph(out_.nodes.size());
        for (auto [u, v] : g_.edges()) out_.control.add_edge(*vertex_node_[u], *vertex_node_[v]);
        return std::move(out_);
    }

private:
    using PinKey = std::tuple<std::string, std::string, Direction>;

    std::size_t add_carrier(Carrier c) {
        out_.carriers.push_back(std::move(c));
        return out_.carriers.size() - 1;
    }

    std::size_t add_vertex(std::optional<std::size_t> node) {
        vertex_node_.push_back(node);
        return g_.add_vertex();
    }

    /// Returns every vertex created for this scope, nested scopes included.
    std::vector<std::size_t> inline_scope(const ProcessModel& pm, const std::string& node_prefix,
                                          const std::string& data_prefix,
                                          const std::map<std::string, std::size_t>& param_carriers) {
        std::vector<std::size_t> created;
        std::map<std::string, std::size_t> carriers = param_carriers;
        std::map<PinKey, std::size_t> pin_carrier;

        for (const auto& n : pm.nodes) {
            if (n.kind == NodeKind::ObjectNode) {
                carriers[n.name] = add_carrier({data_prefix + "." + n.name, pm.name + "." + n.name,
                                                CarrierKind::ObjectNode, n.metamodel, std::nullopt});
            }
        }
        for (const auto& e : pm.edges) {
            if (e.kind != EdgeKind::ObjectFlow) continue;
            auto s = split_endpoint(e.source);
            auto t = split_endpoint(e.target);
            if (s.has_pin() && t.has_pin()) {
                auto local = e.name.empty() ? s.node + "." + s.pin + "__" + t.node + "." + t.pin : e.name;
                const Pin* pin = pm.find_node(s.node)->find_pin(s.pin, Direction::Out);
                auto c = add_carrier({data_prefix + "." + local, pm.name + "." + local, CarrierKind::Flow,
                                      pin->metamodel, std::nullopt});
                pin_carrier[{s.node, s.pin, Direction::Out}] = c;
                pin_carrier[{t.node, t.pin, Direction::In}] = c;
            } else if (s.has_pin()) {
                pin_carrier[{s.node, s.pin, Direction::Out}] = carriers.at(t.node);
            } else if (t.has_pin()) {
                pin_carrier[{t.node, t.pin, Direction::In}] = carriers.at(s.node);
            }
        }

        // (entry vertex, exit vertex) per PM node.
        std::map<std::string, std::pair<std::size_t, std::size_t>> io;
        for (const auto& n : pm.nodes) {
            switch (n.kind) {
                case NodeKind::Action: {
                    FlatNode fn{node_prefix + n.name, FlatNodeKind::Action, false, pm.name, n.impl, n.pins};
                    out_.nodes.push_back(std::move(fn));
                    auto idx = out_.nodes.size() - 1;
                    for (const auto& p : n.pins) {
                        out_.bindings.push_back({idx, p.name, p.direction, pin_carrier.at({n.name, p.name, p.direction})});
                    }
                    auto v = add_vertex(idx);
                    io[n.name] = {v, v};
                    created.push_back(v);
                    break;
                }
                case NodeKind::Fork:
                case NodeKind::Join: {
                    auto kind = n.kind == NodeKind::Fork ? FlatNodeKind::Fork : FlatNodeKind::Join;
                    out_.nodes.push_back({node_prefix + n.name, kind, false, pm.name, {}, {}});
                    auto v = add_vertex(out_.nodes.size() - 1);
                    io[n.name] = {v, v};
                    created.push_back(v);
                    break;
                }
                case NodeKind::Initial:
                case NodeKind::Final:
                case NodeKind::ObjectNode: {
                    auto v = add_vertex(std::nullopt);
                    io[n.name] = {v, v};
                    created.push_back(v);
                    break;
                }
                case NodeKind::CallActivity: {
                    const auto& callee = rpm_.model(n.callee);
                    std::map<std::string, std::size_t> spliced;
                    for (const auto& p : callee.parameters) {
                        spliced[p.name] = pin_carrier.at({n.name, p.name, p.direction});
                    }
                    auto entry = add_vertex(std::nullopt);
                    auto exit = add_vertex(std::nullopt);
                    auto inner = inline_scope(callee, node_prefix + n.name + ".", node_prefix + n.name, spliced);
                    for (auto v : inner) {
                        g_.add_edge(entry, v);
                        g_.add_edge(v, exit);
                    }
                    io[n.name] = {entry, exit};
                    created.push_back(entry);
                    created.push_back(exit);
                    created.insert(created.end(), inner.begin(), inner.end());
                    break;
                }
            }
        }

        std::map<std::string, std::vector<std::size_t>> param_writers, param_readers;
        for (const auto& e : pm.edges) {
            if (e.kind == EdgeKind::ControlFlow) {
                g_.add_edge(io.at(e.source).second, io.at(e.target).first);
                continue;
            }
            auto s = split_endpoint(e.source);
            auto t = split_endpoint(e.target);
            bool s_param = !s.has_pin() && !io.count(s.node);
            bool t_param = !t.has_pin() && !io.count(t.node);
            if (s_param) {
                param_readers[s.node].push_back(io.at(t.node).first);
            } else if (t_param) {
                param_writers[t.node].push_back(io.at(s.node).second);
            } else {
                g_.add_edge(io.at(s.node).second, io.at(t.node).first);
            }
        }
        for (const auto& [param, ws] : param_writers) {
            for (auto w : ws) {
                for (auto r : param_readers[param]) g_.add_edge(w, r);
            }
        }
        return created;
    }

    const ResolvedProcessModel& rpm_;
    FlatGraph out_;
    graph::Digraph g_;
    std::vector<std::optional<std::size_t>> vertex_node_;
};

bool is_degenerate(const FlatNode& n, const graph::Digraph& g, std::size_t v) {
    if (n.kind == FlatNodeKind::Fork) return g.successors(v).size() < 2;
    if (n.kind == FlatNodeKind::Join) return g.predecessors(v).size() < 2;
    return false;
}

}  // namespace

FlatGraph flatten(const ResolvedProcessModel& pm) { return Inliner(pm).run(); }

FlatGraph synthesize_concurrency(const FlatGraph& flat) {
    auto order_graph = flat.precedence();
    if (!graph::is_acyclic(order_graph)) {
        throw Error(ErrorCode::ValidationFailed, "flattened process \"" + flat.name + "\" is cyclic");
    }
    auto reduced = graph::transitive_reduction(order_graph);

    // Explicit gateways left with a single branch after reduction carry no
    // concurrency; drop them and reduce again until stable.
    std::vector<char> dropped(flat.nodes.size(), 0);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t v = 0; v < flat.nodes.size(); ++v) {
            if (dropped[v] || !is_degenerate(flat.nodes[v], reduced, v)) continue;
            graph::bypass_vertex(reduced, v);
            reduced = graph::transitive_reduction(reduced);
            dropped[v] = 1;
            changed = true;
        }
    }

    std::vector<std::string> rank;
    for (const auto& n : flat.nodes) rank.push_back(n.id);
    auto topo = *graph::topological_order(reduced, rank);

    FlatGraph out;
    out.name = flat.name;
    out.carriers = flat.carriers;
    std::vector<std::size_t> remap(flat.nodes.size(), 0);
    for (std::size_t v = 0; v < flat.nodes.size(); ++v) {
        if (dropped[v]) continue;
        remap[v] = out.nodes.size();
        out.nodes.push_back(flat.nodes[v]);
    }
    for (const auto& b : flat.bindings) {
        auto nb = b;
        nb.node = remap[b.node];
        out.bindings.push_back(std::move(nb));
    }
    out.control = graph::Digraph(out.nodes.size());
    for (auto [u, v] : reduced.edges()) {
        if (!dropped[u] && !dropped[v]) out.control.add_edge(remap[u], remap[v]);
    }

    auto& g = out.control;
    auto add_gateway = [&](FlatNodeKind kind, std::size_t n) {
        FlatNode gw;
        gw.id = (kind == FlatNodeKind::Fork ? "fork#" : "join#") + std::to_string(n);
        gw.kind = kind;
        gw.synthesized = true;
        out.nodes.push_back(std::move(gw));
        return g.add_vertex();
    };

    std::size_t forks = 0;
    for (auto old : topo) {
        if (dropped[old]) continue;
        auto v = remap[old];
        if (out.nodes[v].kind == FlatNodeKind::Fork || g.successors(v).size() < 2) continue;
        auto succs = g.successors(v);
        auto f = add_gateway(FlatNodeKind::Fork, ++forks);
        for (auto s : succs) {
            g.remove_edge(v, s);
            g.add_edge(f, s);
        }
        g.add_edge(v, f);
    }
    std::size_t joins = 0;
    for (auto old : topo) {
        if (dropped[old]) continue;
        auto v = remap[old];
        if (out.nodes[v].kind == FlatNodeKind::Join || g.predecessors(v).size() < 2) continue;
        auto preds = g.predecessors(v);
        auto j = add_gateway(FlatNodeKind::Join, ++joins);
        for (auto p : preds) {
            g.remove_edge(p, v);
            g.add_edge(p, j);
        }
        g.add_edge(j, v);
    }
    return out;
}

}  // namespace maple
