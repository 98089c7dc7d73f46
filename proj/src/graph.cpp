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

#include "maple/graph.hpp"

#include <algorithm>
#include <queue>

namespace maple::graph {

std::size_t Digraph::add_vertex() {
    out_.emplace_back();
    in_.emplace_back();
    return out_.size() - 1;
}

bool Digraph::add_edge(std::size_t from, std::size_t to) {
    if (has_edge(from, to)) return false;
    out_[from].push_back(to);
    in_[to].push_back(from);
    return true;
}

void Digraph::remove_edge(std::size_t from, std::size_t to) {
    std::erase(out_[from], to);
    std::erase(in_[to], from);
}

bool Digraph::has_edge(std::size_t from, std::size_t to) const {
    const auto& succ = out_[from];
    return std::find(succ.begin(), succ.end(), to) != succ.end();
}

std::vector<std::pair<std::size_t, std::size_t>> Digraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> result;
    for (std::size_t u = 0; u < out_.size(); ++u) {
        for (auto v : out_[u]) result.emplace_back(u, v);
    }
    std::sort(result.begin(), result.end());
    return result;
}

std::optional<std::vector<std::size_t>> topological_order(const Digraph& g,
                                                          const std::vector<std::string>& rank) {
    const std::size_t n = g.size();
    auto less = [&](std::size_t a, std::size_t b) {
        if (!rank.empty() && rank[a] != rank[b]) return rank[a] < rank[b];
        return a < b;
    };
    auto greater = [&](std::size_t a, std::size_t b) { return less(b, a); };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> ready(greater);

    std::vector<std::size_t> indegree(n);
    for (std::size_t v = 0; v < n; ++v) {
        indegree[v] = g.predecessors(v).size();
        if (indegree[v] == 0) ready.push(v);
    }
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto w : g.successors(v)) {
            if (--indegree[w] == 0) ready.push(w);
        }
    }
    if (order.size() != n) return std::nullopt;
    return order;
}

bool is_acyclic(const Digraph& g) { return topological_order(g).has_value(); }

std::vector<std::size_t> cyclic_vertices(const Digraph& g) {
    // A vertex is on a cycle iff it reaches itself.
    auto reach = transitive_closure(g);
    std::vector<std::size_t> result;
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (reach[v][v]) result.push_back(v);
    }
    return result;
}

Reachability transitive_closure(const Digraph& g) {
    const std::size_t n = g.size();
    Reachability reach(n, std::vector<char>(n, 0));
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < n; ++s) {
        stack.assign(g.successors(s).begin(), g.successors(s).end());
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            if (reach[s][v]) continue;
            reach[s][v] = 1;
            for (auto w : g.successors(v)) {
                if (!reach[s][w]) stack.push_back(w);
            }
        }
    }
    return reach;
}

Digraph transitive_reduction(const Digraph& g) {
    auto reach = transitive_closure(g);
    Digraph result(g.size());
    for (auto [u, v] : g.edges()) {
        bool redundant = false;
        for (auto w : g.successors(u)) {
            if (w != v && reach[w][v]) {
                redundant = true;
                break;
            }
        }
        if (!redundant) result.add_edge(u, v);
    }
    return result;
}

void bypass_vertex(Digraph& g, std::size_t v) {
    auto preds = g.predecessors(v);
    auto succs = g.successors(v);
    for (auto p : preds) g.remove_edge(p, v);
    for (auto s : succs) g.remove_edge(v, s);
    for (auto p : preds) {
        for (auto s : succs) {
            if (p != s) g.add_edge(p, s);
        }
    }
}

}  // namespace maple::graph
