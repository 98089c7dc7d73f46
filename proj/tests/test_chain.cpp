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
#include "maple/chain.hpp"
#include "maple/json_io.hpp"
#include "workspace.hpp"

using namespace maple;
using namespace maple::testing;

namespace {

LaunchConfig fixture_launch() { return parse_launch_config(read_text_file(fixture_dir() / "launch.json")); }

std::vector<std::string> error_codes(const std::vector<Diagnostic>& diags, Severity sev = Severity::Error) {
    std::vector<std::string> out;
    for (const auto& d : diags)
        if (d.severity == sev) out.push_back(d.code);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

TEST_CASE("fixture chain shape") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto p = translate_fixture(ws);
    const auto& c = p.chain;
    CHECK(c.name == "NSDesignAndOnboarding");
    CHECK(c.steps.size() == 8);
    CHECK(c.gateways.size() == 2);
    CHECK(c.data_nodes.size() == 9);

    const auto* create = c.find_step("NSOnboarding.CreateNSDInfo");
    REQUIRE(create);
    CHECK(create->handler_kind == "exec");
    CHECK(c.find_step("NSDesign.Decompose")->handler_kind == "builtin");

    const auto* req = c.find_data_node("NSReq");
    REQUIRE(req);
    CHECK(req->binding.kind == BindingKind::LaunchParameter);
    CHECK(req->parameter_direction == Direction::In);
    CHECK(c.readers("NSReq") == std::vector<std::string>{"NSDesign.Decompose"});
    for (const auto& d : c.data_nodes) {
        if (d.binding.kind == BindingKind::Intermediate) CHECK(p.mgm.at(ResourceId{d.binding.value}).is_virtual());
    }

    // steps are listed in a topological order
    auto cg = control_graph(c);
    auto reach = graph::transitive_closure(cg.g);
    for (std::size_t i = 0; i < c.steps.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(reach[i][j]);

    CHECK(validate_chain(c, p.mgm, fixture_launch()).empty());
}

TEST_CASE("validation diagnostics") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto p = translate_fixture(ws);
    auto launch = fixture_launch();

    SUBCASE("missing binding") {
        launch.bindings.clear();
        CHECK(error_codes(validate_chain(p.chain, p.mgm, launch)) == std::vector<std::string>{"missing-binding"});
    }
    SUBCASE("missing file") {
        launch.bindings["NSReq"] = "in/none.model";
        CHECK(error_codes(validate_chain(p.chain, p.mgm, launch)) == std::vector<std::string>{"missing-file"});
    }
    SUBCASE("conformance mismatch") {
        launch.bindings["NSReq"] = "in/other.model";
        write_file(ws / "in" / "other.model", "x");
        p.mgm.register_resource({ResourceKind::ModelInstance, "other", "in/other.model", p.mgm.metamodel_by_name("nsd"), {}});
        auto diags = validate_chain(p.chain, p.mgm, launch);
        CHECK(error_codes(diags) == std::vector<std::string>{"conformance-mismatch"});
        CHECK(diags[0].message.rfind("conformance mismatch", 0) == 0);
    }
    SUBCASE("unused binding warns") {
        launch.bindings["Extra"] = "in/nsreq1.model";
        auto diags = validate_chain(p.chain, p.mgm, launch);
        CHECK(error_codes(diags).empty());
        CHECK(error_codes(diags, Severity::Warning) == std::vector<std::string>{"unused-binding"});
    }
    SUBCASE("cycle") {
        p.chain.control_edges.emplace_back("NSOnboarding.ValidateAndCatalog", "NSDesign.Decompose");
        CHECK(error_codes(validate_chain(p.chain, p.mgm, launch)) == std::vector<std::string>{"cycle"});
    }
    SUBCASE("dangling and arity") {
        p.chain.data_edges.push_back({"Ghost", "NSDesign.Decompose", "nsreq", Direction::In});
        p.chain.data_edges.erase(std::remove_if(p.chain.data_edges.begin(), p.chain.data_edges.end(),
                                                [](const DataEdge& e) {
                                                    return e.step == "NSOnboarding.UploadNSD" &&
                                                           e.direction == Direction::Out;
                                                }),
                                 p.chain.data_edges.end());
        auto codes = error_codes(validate_chain(p.chain, p.mgm, launch));
        CHECK(std::count(codes.begin(), codes.end(), "dangling") == 1);
        CHECK(std::count(codes.begin(), codes.end(), "pin-arity") == 1);
    }
    SUBCASE("unknown metamodel") {
        p.chain.data_nodes[0].metamodel = "nope";
        auto codes = error_codes(validate_chain(p.chain, p.mgm, launch));
        CHECK(std::count(codes.begin(), codes.end(), "unknown-metamodel") == 1);
    }
}

TEST_CASE("unordered writers serialize with a warning") {
    TempDir dir;
    auto env = make_chain_env(dir.path());
    FlatGraph flat;
    flat.name = "W";
    flat.carriers = {{"IN", "W.IN", CarrierKind::Parameter, "m", Direction::In},
                     {"D", "W.D", CarrierKind::Flow, "m", std::nullopt}};
    for (auto id : {"b", "a"}) {
        flat.nodes.push_back({id, FlatNodeKind::Action, false, "W", "copy",
                              {{"i0", Direction::In, "m"}, {"o", Direction::Out, "m"}}});
    }
    flat.bindings = {{0, "i0", Direction::In, 0}, {0, "o", Direction::Out, 1},
                     {1, "i0", Direction::In, 0}, {1, "o", Direction::Out, 1}};
    flat.control = graph::Digraph(2);
    auto chain = chain_from_flat(synthesize_concurrency(flat), env.impl);
    LaunchConfig launch;
    launch.bindings["IN"] = env.input;
    auto diags = validate_chain(chain, env.mgm, launch);
    CHECK(error_codes(diags).empty());
    CHECK(error_codes(diags, Severity::Warning) == std::vector<std::string>{"writer-conflict"});
    CHECK(chain.writers("D") == std::vector<std::string>{"a", "b"});

    // an explicit order between the writers takes precedence
    chain.control_edges.emplace_back("b", "a");
    diags = validate_chain(chain, env.mgm, launch);
    CHECK(error_codes(diags).empty());
    CHECK(error_codes(diags, Severity::Warning).empty());
}

TEST_CASE("signature mismatch between pin and exec spec") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto text = read_text_file(ws / "impl" / "decompose.builtin");
    auto at = text.find("\"nsreq\"");
    REQUIRE(at != std::string::npos);
    text.replace(at, 7, "\"nsd\"");
    write_file(ws / "impl" / "decompose.builtin", text);
    try {
        translate_fixture(ws);
        FAIL("expected SignatureMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SignatureMismatch);
    }
}

TEST_CASE("dot export") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto dot = export_dot(translate_fixture(ws).chain);
    CHECK(dot == read_text_file(golden_dir() / "chain.dot"));
}

TEST_CASE("property: chain store round trip is the identity") {
    Rng rng(23);
    TempDir dir;
    for (int i = 0; i < 100; ++i) {
        auto c = random_chain_document(rng);
        CHECK(chain_from_json(chain_to_json(c)) == c);
        auto path = chain_store_path(dir.path(), "p" + std::to_string(i));
        save_chain(c, path);
        CHECK(load_chain(path) == c);
    }
}

TEST_CASE("malformed chain stores are rejected") {
    for (const char* text : {"1", R"({"version": 2})", R"({"version": 1, "name": "x", "steps": {}})"}) {
        try {
            chain_from_json(text);
            FAIL("accepted: " << text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedStore);
        }
    }
}
