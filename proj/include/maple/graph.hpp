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

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace maple::graph {

/// Dense directed graph over vertices 0..n-1. Parallel edges collapse.
class Digraph {
public:
    Digraph() = default;
    explicit Digraph(std::size_t n) : out_(n), in_(n) {}

    std::size_t size() const noexcept { return out_.size(); }
    std::size_t add_vertex();
    /// Returns false when the edge already existed.
    bool add_edge(std::size_t from, std::size_t to);
    void remove_edge(std::size_t from, std::size_t to);
    bool has_edge(std::size_t from, std::size_t to) const;

    const std::vector<std::size_t>& successors(std::size_t v) const { return out_[v]; }
    const std::vector<std::size_t>& predecessors(std::size_t v) const { return in_[v]; }
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

private:
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
};

/// Boolean reachability matrix; reach[u][v] is true iff a non-empty path u->v exists.
using Reachability = std::vector<std::vector<char>>;

/// Kahn's algorithm. Ties are broken by `rank` (smallest first); when `rank`
/// is empty the vertex index is used. Returns nullopt on a cycle.
std::optional<std::vector<std::size_t>> topological_order(const Digraph& g,
                                                          const std::vector<std::string>& rank = {});

bool is_acyclic(const Digraph& g);

/// Vertices lying on some cycle, in ascending order.
std::vector<std::size_t> cyclic_vertices(const Digraph& g);

Reachability transitive_closure(const Digraph& g);

/// Transitive reduction of a DAG: keeps u->v only when no longer path exists.
Digraph transitive_reduction(const Digraph& g);

/// Removes vertex `v` by connecting each predecessor to each successor.
/// The vertex stays in the index space but becomes isolated.
void bypass_vertex(Digraph& g, std::size_t v);

}  // namespace maple::graph
