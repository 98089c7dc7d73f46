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

#include <random>

#include "doctest.h"
#include "maple/graph.hpp"

using namespace maple::graph;

namespace {

Digraph random_dag(std::mt19937_64& rng, std::size_t n, double p) {
    Digraph g(n);
    std::bernoulli_distribution edge(p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (edge(rng)) g.add_edge(i, j);
    return g;
}

// Floyd-Warshall over the adjacency matrix.
Reachability naive_closure(const Digraph& g) {
    auto n = g.size();
    Reachability r(n, std::vector<char>(n, 0));
    for (auto [u, v] : g.edges()) r[u][v] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = 1;
    return r;
}

}  // namespace

TEST_CASE("parallel edges collapse") {
    Digraph g(2);
    CHECK(g.add_edge(0, 1));
    CHECK_FALSE(g.add_edge(0, 1));
    CHECK(g.edges().size() == 1);
    g.remove_edge(0, 1);
    CHECK_FALSE(g.has_edge(0, 1));
    CHECK(g.predecessors(1).empty());
}

TEST_CASE("topological order breaks ties by rank") {
    Digraph g(4);
    g.add_edge(0, 3);
    auto order = topological_order(g, {"d", "c", "b", "a"});
    REQUIRE(order);
    CHECK(*order == std::vector<std::size_t>{2, 1, 0, 3});
    CHECK(*topological_order(g) == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("cycles are detected and located") {
    Digraph g(4);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(2, 1);
    g.add_edge(2, 3);
    CHECK_FALSE(topological_order(g));
    CHECK_FALSE(is_acyclic(g));
    CHECK(cyclic_vertices(g) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("bypass keeps reachability through the removed vertex") {
    Digraph g(4);
    g.add_edge(0, 1);
    g.add_edge(3, 1);
    g.add_edge(1, 2);
    bypass_vertex(g, 1);
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(3, 2));
    CHECK(g.successors(1).empty());
    CHECK(g.predecessors(1).empty());
}

TEST_CASE("property: closure, order and reduction agree with a naive oracle") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto n = std::uniform_int_distribution<std::size_t>(0, 14)(rng);
        auto g = random_dag(rng, n, trial % 2 ? 0.2 : 0.5);
        auto expected = naive_closure(g);
        CHECK(transitive_closure(g) == expected);

        auto order = topological_order(g);
        REQUIRE(order);
        std::vector<std::size_t> pos(n);
        for (std::size_t i = 0; i < n; ++i) pos[(*order)[i]] = i;
        for (auto [u, v] : g.edges()) CHECK(pos[u] < pos[v]);

        auto red = transitive_reduction(g);
        CHECK(naive_closure(red) == expected);
        // minimal: no kept edge is implied by a longer path
        for (auto [u, v] : red.edges()) {
            auto without = red;
            without.remove_edge(u, v);
            CHECK_FALSE(naive_closure(without)[u][v]);
        }
    }
}
