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
#include "maple/discovery.hpp"
#include "workspace.hpp"

using namespace maple;
using namespace maple::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::UsageError;
}

}  // namespace

TEST_CASE("exec spec parsing") {
    auto spec = parse_exec_spec(R"({
  "name": "upload",
  "command": "tool --in {a} --out {b}",
  "parameters": [
    {"name": "a", "direction": "in", "metamodel": "nsd"},
    {"name": "b", "direction": "out", "metamodel": "info", "modelRef": "info"}
  ]
})");
    CHECK(spec.name == "upload");
    CHECK(spec.parameters.size() == 2);
    CHECK(spec.find_parameter("a")->model_ref == "a");
    CHECK(spec.find_by_ref("info", Direction::Out)->name == "b");
    CHECK_FALSE(spec.find_by_ref("info", Direction::In));
    CHECK(command_placeholders(spec.command) == std::vector<std::string>{"a", "b"});

    CHECK(code_of([] {
              parse_exec_spec(R"({"name": "x", "command": "t {zz}", "parameters": []})");
          }) == ErrorCode::UnboundPlaceholder);
    CHECK(code_of([] {
              parse_exec_spec(R"({"name": "x", "command": "t", "parameters": [
                {"name": "a", "direction": "in", "metamodel": "m"},
                {"name": "a", "direction": "out", "metamodel": "m"}]})");
          }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_exec_spec(R"({"name": "x"})"); }) == ErrorCode::SyntaxError);
}

TEST_CASE("loaders classify by suffix and stay disjoint") {
    auto loaders = default_loaders();
    check_loader_disjointness(loaders);
    CHECK(classify("a/b.mm.json", loaders)->yields == ResourceKind::MetamodelDescriptor);
    CHECK(classify("b.pm.json", loaders)->yields == ResourceKind::ProcessModel);
    CHECK(classify("b.process", loaders)->yields == ResourceKind::ExecutableSpec);
    CHECK(classify("b.builtin", loaders)->yields == ResourceKind::Transformation);
    CHECK(classify("b.json", loaders) == nullptr);
    CHECK(classify("b.model", loaders) == nullptr);

    auto clash = loaders;
    clash.push_back({"json", {".json"}, ResourceKind::ModelInstance, nullptr});
    CHECK(code_of([&] { check_loader_disjointness(clash); }) == ErrorCode::UsageError);
}

TEST_CASE("fixture discovery registers every model and implementation") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto mgm = base_megamodel(ws);
    auto report = discover_workspace(ws, mgm);
    CHECK(report.registered.size() == 19);
    CHECK(report.warnings.empty());
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0].first == "launch.json");

    auto nsd = mgm.metamodel_by_name("nsd");
    REQUIRE(nsd);
    auto input = mgm.find_by_location(ResourceKind::ModelInstance, "in/nsreq1.model");
    REQUIRE(input);
    CHECK(mgm.at(*input).metamodel == mgm.metamodel_by_name("nsreq"));

    auto spec = mgm.find_by_location(ResourceKind::ExecutableSpec, "impl/create_nsdinfo.process");
    REQUIRE(spec);
    CHECK(mgm.at(*spec).meta.at("handler") == "exec");
    auto builtin = mgm.find_by_location(ResourceKind::Transformation, "impl/decompose.builtin");
    REQUIRE(builtin);
    CHECK(mgm.at(*builtin).meta.at("handler") == "builtin");
    CHECK(mgm.at(*builtin).meta.at("command") == "template");
}

TEST_CASE("second discovery registers nothing") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto mgm = base_megamodel(ws);
    discover_workspace(ws, mgm);
    auto before = mgm;
    auto again = discover_workspace(ws, mgm);
    CHECK(again.registered.empty());
    CHECK(mgm == before);
}

TEST_CASE("manifest declares model instances; broken files are skipped") {
    TempDir dir;
    const auto& ws = dir.path();
    write_file(ws / "mm" / "m.mm.json", R"({"name": "m"})");
    write_file(ws / "data" / "a.txt", "a");
    write_file(ws / ".maple" / "manifest.json", R"({"models": [{"path": "data/a.txt", "metamodel": "m"}]})");
    write_file(ws / "bad.pm.json", "{ broken");
    write_file(ws / "orphan.builtin", R"({"name": "o", "command": "copy", "parameters": []})");
    write_file(ws / ".hidden" / "x.mm.json", R"({"name": "hidden"})");
    auto mgm = base_megamodel(ws);
    auto report = discover_workspace(ws, mgm);
    CHECK(report.registered.size() == 3);
    CHECK(mgm.find_by_location(ResourceKind::ModelInstance, "data/a.txt"));
    CHECK_FALSE(mgm.metamodel_by_name("hidden"));
    auto bad = std::find_if(report.skipped.begin(), report.skipped.end(),
                            [](const auto& s) { return s.first == "bad.pm.json"; });
    CHECK(bad != report.skipped.end());
    CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("sidecar naming an unknown metamodel is reported, not fatal") {
    TempDir dir;
    const auto& ws = dir.path();
    write_file(ws / "a.model", "a");
    write_file(ws / "a.model.conforms", "ghost\n");
    auto mgm = base_megamodel(ws);
    auto report = discover_workspace(ws, mgm);
    CHECK(report.registered.empty());
    CHECK(report.skipped.size() == 1);
}

TEST_CASE("discover_pm registers carriers, weave and relations") {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto p = translate_fixture(ws);
    auto pm = p.mgm.at(p.pm.pm);
    CHECK(pm.kind == ResourceKind::ProcessModel);
    CHECK(pm.name == "NSDesignAndOnboarding");
    auto virtuals = 0;
    for (const auto& r : p.mgm.resources()) virtuals += r.is_virtual();
    CHECK(virtuals > 0);
    CHECK(p.pm.resolved.callees.size() == 2);

    // running it again adds nothing
    auto count = p.mgm.resource_count();
    discover_pm(ws / "flows" / "main.pm.json", p.mgm, ws / "flows");
    CHECK(p.mgm.resource_count() == count);
}
