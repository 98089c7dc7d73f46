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

#include <algorithm>

#include "doctest.h"
#include "generators.hpp"
#include "maple/procmodel.hpp"
#include "workspace.hpp"

using namespace maple;
using namespace maple::testing;

namespace {

const char* kSmall = R"({
  "name": "Small",
  "parameters": [
    {"name": "src", "direction": "in", "metamodel": "m"},
    {"name": "dst", "direction": "out", "metamodel": "m"}
  ],
  "nodes": [
    {"name": "start", "kind": "initial"},
    {"name": "A", "kind": "action", "impl": "impl/a.builtin",
     "pins": [{"name": "x", "direction": "in", "metamodel": "m"}, {"name": "x", "direction": "out", "metamodel": "m"}]},
    {"name": "end", "kind": "final"}
  ],
  "edges": [
    {"kind": "control", "source": "start", "target": "A"},
    {"kind": "control", "source": "A", "target": "end"},
    {"kind": "object", "source": "src", "target": "A.x"},
    {"kind": "object", "source": "A.x", "target": "dst"}
  ]
}
)";

std::vector<std::string> codes(const std::vector<Diagnostic>& diags) {
    std::vector<std::string> out;
    for (const auto& d : diags) out.push_back(d.code);
    return out;
}

bool has_code(const std::vector<Diagnostic>& diags, std::string_view code) {
    return std::any_of(diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.code == code; });
}

ProcessModel small() { return parse_pm(kSmall); }

}  // namespace

TEST_CASE("parse keeps references symbolic and validates") {
    auto pm = small();
    CHECK(pm.name == "Small");
    CHECK(pm.nodes.size() == 3);
    REQUIRE(pm.find_node("A"));
    CHECK(pm.find_node("A")->find_pin("x", Direction::Out));
    CHECK(pm.edges[2].source == "src");
    CHECK(validate_pm(pm).empty());
    auto ep = split_endpoint("A.x");
    CHECK(ep.node == "A");
    CHECK(ep.pin == "x");
    CHECK_FALSE(split_endpoint("src").has_pin());
}

TEST_CASE("syntax errors carry positions") {
    try {
        parse_pm("{\n  \"name\": \"P\",\n  \"nodes\": [{\"name\": \"a\", \"kind\": \"blob\"}]\n}");
        FAIL("expected SyntaxError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SyntaxError);
        CHECK(e.pos().line == 3);
    }
    try {
        parse_pm(R"({"name": "P", "nodes": [{"name": "a", "kind": "action"}, {"name": "a", "kind": "final"}]})");
        FAIL("expected DuplicateNodeName");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateNodeName);
    }
    CHECK_THROWS_AS(parse_pm("[1, 2"), Error);
}

TEST_CASE("structural diagnostics") {
    SUBCASE("missing initial") {
        auto pm = small();
        pm.nodes.erase(pm.nodes.begin());
        pm.edges.erase(pm.edges.begin());
        CHECK(has_code(validate_pm(pm), "initial-count"));
    }
    SUBCASE("unknown reference") {
        auto pm = small();
        pm.edges[2].source = "nowhere";
        CHECK(has_code(validate_pm(pm), "unknown-reference"));
    }
    SUBCASE("control cycle") {
        auto pm = small();
        pm.nodes.push_back({"B", NodeKind::Action, "impl/b.builtin", {}, {}, {}});
        pm.edges.push_back({EdgeKind::ControlFlow, "A", "B", {}});
        pm.edges.push_back({EdgeKind::ControlFlow, "B", "A", {}});
        CHECK(has_code(validate_pm(pm), "cycle"));
    }
    SUBCASE("unconnected pin") {
        auto pm = small();
        pm.edges.pop_back();
        auto diags = validate_pm(pm);
        CHECK(has_code(diags, "unconnected-pin"));
        CHECK(has_code(diags, "unwritten-parameter"));
    }
    SUBCASE("pin metamodel mismatch") {
        auto pm = small();
        pm.parameters[0].metamodel = "other";
        CHECK(has_code(validate_pm(pm), "pin-metamodel-mismatch"));
    }
    SUBCASE("input parameter written") {
        auto pm = small();
        pm.edges[3].target = "src";
        CHECK(has_code(validate_pm(pm), "bad-endpoint"));
    }
    SUBCASE("fork degree") {
        auto pm = small();
        pm.nodes.push_back({"f", NodeKind::Fork, {}, {}, {}, {}});
        pm.edges.push_back({EdgeKind::ControlFlow, "start", "f", {}});
        pm.edges.push_back({EdgeKind::ControlFlow, "f", "A", {}});
        CHECK(has_code(validate_pm(pm), "fork-degree"));
    }
    SUBCASE("undeclared callee") {
        auto pm = small();
        pm.nodes[1].kind = NodeKind::CallActivity;
        pm.nodes[1].impl.clear();
        pm.nodes[1].callee = "Q";
        CHECK(has_code(validate_pm(pm), "undeclared-callee"));
    }
}

TEST_CASE("call resolution errors") {
    auto callee = small();
    callee.name = "Callee";
    callee.parameters[0].name = "x";  // call-site pins are matched by name
    callee.parameters[1].name = "y";
    callee.edges[2].source = "x";
    callee.edges[3].target = "y";

    auto caller = small();
    caller.name = "Caller";
    caller.calls = {"Callee"};
    caller.nodes[1].kind = NodeKind::CallActivity;
    caller.nodes[1].impl.clear();
    caller.nodes[1].callee = "Callee";
    caller.nodes[1].pins[1].name = "y";
    caller.edges[3].source = "A.y";
    REQUIRE(validate_pm(caller).empty());

    auto expect = [&](const std::map<std::string, ProcessModel>& lib, ErrorCode code) {
        try {
            resolve_calls(caller, lib);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == code);
        }
    };
    expect({}, ErrorCode::UnknownCallee);

    auto mismatched = callee;
    mismatched.parameters[1].name = "z";
    mismatched.edges[3].target = "z";
    expect({{"Callee", mismatched}}, ErrorCode::ParameterMismatch);

    auto recursive = caller;
    recursive.name = "Callee";
    recursive.calls = {"Caller"};
    recursive.nodes[1].callee = "Caller";
    recursive.parameters = callee.parameters;
    recursive.edges[2].source = "x";
    recursive.edges[3].target = "y";
    expect({{"Callee", recursive}, {"Caller", caller}}, ErrorCode::RecursiveCall);

    auto resolved = resolve_calls(caller, {{"Callee", callee}});
    CHECK(resolved.call_depth() == 1);
    CHECK(resolved.model("Callee").name == "Callee");
}

TEST_CASE("property: print and parse round-trip random hierarchies") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        auto gen = random_hierarchical_pm(rng);
        CHECK(parse_pm(print_pm(gen.root)) == gen.root);
        CHECK(codes(validate_pm(gen.root)) == std::vector<std::string>{});
        for (const auto& [name, pm] : gen.library) {
            CHECK(parse_pm(print_pm(pm)) == pm);
            CHECK(codes(validate_pm(pm)) == std::vector<std::string>{});
        }
        auto resolved = resolve_calls(gen.root, gen.library);
        CHECK(resolved.callees.size() == gen.library.size());
        CHECK(resolved.call_depth() <= 3);
    }
}

TEST_CASE("library scan reports unparsable files") {
    TempDir dir;
    write_file(dir.path() / "good.pm.json", kSmall);
    write_file(dir.path() / "bad.pm.json", "{ nope");
    std::vector<Diagnostic> problems;
    auto lib = scan_pm_library(dir.path(), &problems);
    CHECK(lib.size() == 1);
    CHECK(lib.count("Small"));
    CHECK(problems.size() == 1);
    CHECK_THROWS_AS(scan_pm_library(dir.path()), Error);
}

TEST_CASE("line_of_quoted") {
    CHECK(line_of_quoted("{\n  \"a\": 1,\n  \"b\": 2\n}", "b") == 3);
    CHECK(line_of_quoted("{}", "b") == 0);
}
