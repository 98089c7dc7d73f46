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

#include <thread>

#include "doctest.h"
#include "generators.hpp"
#include "maple/megamodel.hpp"
#include "workspace.hpp"

using namespace maple;
using namespace maple::testing;

TEST_CASE("base megamodel holds the built-in metamodels") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    CHECK(mgm.resource_count() == 5);
    CHECK(mgm.metamodel_by_name("core")->value == "r000001");
    CHECK(mgm.metamodel_by_name("process")->value == "r000005");
    CHECK_FALSE(mgm.metamodel_by_name("nsd"));
}

TEST_CASE("registration is idempotent on kind and location") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    write_file(dir.path() / "a.model", "x");
    ResourceDraft d{ResourceKind::ModelInstance, "a", (dir.path() / "a.model").string(), mgm.metamodel_by_name("core"),
                    {}};
    auto first = mgm.register_resource(d);
    d.location = "a.model";
    CHECK(mgm.register_resource(d) == first);
    CHECK(mgm.at(first).location == "a.model");
    CHECK(mgm.resource_count() == 6);
    CHECK(mgm.relation_count() == 6);  // 5 descriptors conform to core, plus a
}

TEST_CASE("registration errors carry codes") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    ResourceDraft missing{ResourceKind::Transformation, "t", "nope.builtin", std::nullopt, {}};
    CHECK_THROWS_AS(mgm.register_resource(missing), Error);
    try {
        mgm.register_resource(missing);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingFile);
    }
    write_file(dir.path() / "m.model", "x");
    ResourceDraft no_mm{ResourceKind::ModelInstance, "m", "m.model", std::nullopt, {}};
    try {
        mgm.register_resource(no_mm);
        FAIL("expected UnknownMetamodel");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownMetamodel);
    }
}

TEST_CASE("relations are checked") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    auto core = *mgm.metamodel_by_name("core");
    auto pm = *mgm.metamodel_by_name("pm");
    auto v = mgm.register_resource(ResourceDraft::virtual_model("v", core));
    auto expect = [&](const Relation& r, ErrorCode code) {
        try {
            mgm.add_relation(r);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == code);
        }
    };
    expect({RelationKind::ConformsTo, v, ResourceId{"r999999"}}, ErrorCode::DanglingEndpoint);
    expect({RelationKind::ConformsTo, v, v}, ErrorCode::BadTargetKind);
    expect({RelationKind::ConformsTo, v, pm}, ErrorCode::ConformanceConflict);
    expect({RelationKind::WeaveOf, v, pm}, ErrorCode::BadTargetKind);
    auto before = mgm.relation_count();
    mgm.add_relation({RelationKind::ConformsTo, v, core});
    CHECK(mgm.relation_count() == before);
}

TEST_CASE("query by kind, name, metamodel and relation") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    auto core = *mgm.metamodel_by_name("core");
    auto a = mgm.register_resource(ResourceDraft::virtual_model("a", core));
    mgm.register_resource(ResourceDraft::virtual_model("b", *mgm.metamodel_by_name("pm")));
    CHECK(mgm.find({ResourceKind::ModelInstance, std::nullopt, std::nullopt, std::nullopt}).size() == 2);
    CHECK(mgm.find({std::nullopt, "a", std::nullopt, std::nullopt}) == std::vector<ResourceId>{a});
    CHECK(mgm.find({ResourceKind::ModelInstance, std::nullopt, "core", std::nullopt}) == std::vector<ResourceId>{a});
    CHECK(mgm.find({ResourceKind::ModelInstance, std::nullopt, core.value, std::nullopt}) ==
          std::vector<ResourceId>{a});
    auto related = mgm.find({ResourceKind::ModelInstance, std::nullopt, std::nullopt, core});
    CHECK(related == std::vector<ResourceId>{a});
}

TEST_CASE("record_artifact sets producer and one conformance") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    write_file(dir.path() / "out" / "x.txt", "data");
    auto id = mgm.record_artifact(dir.path() / "out" / "x.txt", *mgm.metamodel_by_name("core"), "S1", "X");
    auto r = mgm.at(id);
    CHECK(r.name == "X");
    CHECK(r.location == "out/x.txt");
    CHECK(r.meta.at("producer") == "S1");
    std::size_t conforms = 0;
    for (const auto& rel : mgm.relations()) conforms += rel.source == id && rel.kind == RelationKind::ConformsTo;
    CHECK(conforms == 1);
    CHECK_THROWS_AS(mgm.record_artifact(dir.path() / "missing", *mgm.metamodel_by_name("core"), "S1"), Error);
}

TEST_CASE("concurrent artifact recording yields distinct ids") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    auto core = *mgm.metamodel_by_name("core");
    for (int i = 0; i < 64; ++i) write_file(dir.path() / ("f" + std::to_string(i)), "x");
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = t; i < 64; i += 8) mgm.record_artifact(dir.path() / ("f" + std::to_string(i)), core, "s");
        });
    }
    for (auto& th : threads) th.join();
    CHECK(mgm.resource_count() == 5 + 64);
}

TEST_CASE("property: store round trip is the identity") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        TempDir dir;
        auto mgm = random_megamodel(rng, dir.path());
        auto store = megamodel_store_path(dir.path());
        save_megamodel(mgm, store);
        auto back = load_megamodel(store);
        CHECK(back == mgm);
        CHECK(back.workspace_root() == dir.path());
        CHECK(megamodel_to_json(back) == megamodel_to_json(mgm));
    }
}

TEST_CASE("malformed stores are rejected") {
    TempDir dir;
    for (const char* text : {"{", R"({"version": 9, "resources": [], "relations": []})",
                             R"({"version": 1, "resources": {}, "relations": []})",
                             R"({"version": 1, "resources": [{"id": "r1", "kind": "Nope", "name": "x",
                                 "location": "virtual"}], "relations": []})"}) {
        try {
            megamodel_from_json(text, dir.path());
            FAIL("accepted: " << text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedStore);
        }
    }
}

TEST_CASE("dot and table rendering mention every resource") {
    TempDir dir;
    auto mgm = base_megamodel(dir.path());
    auto dot = megamodel_to_dot(mgm);
    auto table = megamodel_to_table(mgm);
    for (const auto& r : mgm.resources()) {
        CHECK(dot.find(r.id.value) != std::string::npos);
        CHECK(table.find(r.id.value) != std::string::npos);
    }
}
