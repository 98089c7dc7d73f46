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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "generators.hpp"
#include "maple/enactor.hpp"
#include "maple/json_io.hpp"
#include "workspace.hpp"

using namespace maple;
using namespace maple::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string title;
    double limit_s;
    std::function<Outcome()> check;
};

LaunchConfig fixture_launch(const fs::path& ws, std::string run_id) {
    auto l = parse_launch_config(read_text_file(ws / "launch.json"));
    l.run_id = std::move(run_id);
    return l;
}

HandlerRegistry fixture_handlers() { return default_handlers({tool_dir()}); }

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

std::vector<std::string> golden_list(const char* key) {
    auto doc = parse_json(read_text_file(golden_dir() / "manifest.json"), ErrorCode::SyntaxError, "golden");
    std::vector<std::string> out;
    for (const auto& v : doc.at(key)) out.push_back(v.get<std::string>());
    std::sort(out.begin(), out.end());
    return out;
}

// 1 ------------------------------------------------------------------------

Outcome fixture_topology() {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    const auto chain = translate_fixture(ws).chain;
    if (chain.steps.size() != 8) return {false, std::to_string(chain.steps.size()) + " steps"};

    auto cg = control_graph(chain);
    auto reach = graph::transitive_closure(cg.g);
    auto refine = cg.index.at("NSDesign.RefineNSD");
    auto enrich = cg.index.at("NSDesign.EnrichOntology");
    bool bracketed = false;
    for (const auto& f : chain.gateways) {
        if (f.kind != GatewayKind::Fork || !f.synthesized) continue;
        for (const auto& j : chain.gateways) {
            if (j.kind != GatewayKind::Join || !j.synthesized) continue;
            auto fv = cg.index.at(f.id);
            auto jv = cg.index.at(j.id);
            bool direct = cg.g.has_edge(fv, refine) && cg.g.has_edge(fv, enrich) && cg.g.has_edge(refine, jv) &&
                          cg.g.has_edge(enrich, jv);
            bool unordered = !reach[refine][enrich] && !reach[enrich][refine];
            bracketed |= direct && unordered;
        }
    }
    if (!bracketed) return {false, "RefineNSD/EnrichOntology not between one synthesized fork/join"};

    std::size_t pairs = 0;
    for (const auto& a : chain.steps) {
        if (a.id.rfind("NSDesign.", 0) != 0) continue;
        for (const auto& b : chain.steps) {
            if (b.id.rfind("NSOnboarding.", 0) != 0) continue;
            if (!reach[cg.index.at(a.id)][cg.index.at(b.id)]) return {false, a.id + " does not precede " + b.id};
            ++pairs;
        }
    }
    if (pairs != 15) return {false, std::to_string(pairs) + " design/onboarding pairs, expected 15"};
    return {true, "8 steps, fork/join around RefineNSD+EnrichOntology, 15/15 design<onboarding"};
}

// 2 ------------------------------------------------------------------------

Outcome heterogeneous_dispatch() {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto p = translate_fixture(ws);
    auto report = enact(p.chain, fixture_launch(ws, "c2"), p.mgm, fixture_handlers());
    if (!report.success) return {false, "run failed: " + report.message};
    auto persisted = report_from_json(read_text_file(run_directory(ws, "c2") / "report.json"));
    std::set<std::string> kinds;
    for (const auto& [id, rec] : persisted.steps) {
        if (rec.status == StepStatus::Completed) kinds.insert(rec.handler_kind);
    }
    bool ok = kinds.count("builtin") && kinds.count("exec");
    return {ok, "handler kinds {" + join({kinds.begin(), kinds.end()}) + "}"};
}

// 3 ------------------------------------------------------------------------

Outcome live_megamodel_update() {
    auto expected = golden_list("producedDataNodes");
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto p = translate_fixture(ws);
    auto report = enact(p.chain, fixture_launch(ws, "c3"), p.mgm, fixture_handlers());
    if (!report.success) return {false, "run failed: " + report.message};

    auto relations = p.mgm.relations();
    std::vector<std::string> produced;
    for (const auto& id : report.mgm_delta) {
        auto r = p.mgm.at(id);
        if (r.kind != ResourceKind::ModelInstance) return {false, id.value + " is not a ModelInstance"};
        auto conforms = std::count_if(relations.begin(), relations.end(), [&](const Relation& rel) {
            return rel.source == id && rel.kind == RelationKind::ConformsTo;
        });
        if (conforms != 1) return {false, id.value + " has " + std::to_string(conforms) + " ConformsTo relations"};
        auto producer = r.meta.find("producer");
        if (producer == r.meta.end() || !p.chain.find_step(producer->second)) {
            return {false, id.value + " lacks a producer step"};
        }
        const auto* node = p.chain.find_data_node(r.name);
        if (!node) return {false, id.value + " names no data node"};
        if (*r.metamodel != *p.mgm.metamodel_by_name(node->metamodel)) return {false, id.value + " wrong metamodel"};
        produced.push_back(r.name);
    }
    std::sort(produced.begin(), produced.end());
    if (produced != expected) return {false, "produced {" + join(produced) + "}, golden {" + join(expected) + "}"};
    return {true, std::to_string(produced.size()) + " new ModelInstances, one ConformsTo and a producer each"};
}

// 4 ------------------------------------------------------------------------

std::map<std::string, std::string> artifact_bytes(const TransformationChain& chain, const fs::path& ws,
                                                  const std::string& run_id) {
    std::map<std::string, std::string> out;
    for (const auto& d : chain.data_nodes) {
        if (d.binding.kind == BindingKind::LaunchParameter && d.parameter_direction == Direction::In) continue;
        auto sub = d.binding.kind == BindingKind::LaunchParameter ? "outputs" : "intermediates";
        auto path = run_directory(ws, run_id) / sub / d.id;
        out[d.id] = fs::exists(path) ? read_text_file(path) : std::string("<missing>");
    }
    return out;
}

Outcome oracle_equivalence() {
    Rng rng(20240601);
    auto handlers = default_handlers();
    int agreed = 0;
    std::string first_failure;
    for (int trial = 0; trial < 100; ++trial) {
        TempDir dir;
        auto env = make_chain_env(dir.path());
        auto chain = random_pure_chain(rng, env, 8, 3);
        LaunchConfig l;
        l.bindings["IN"] = env.input;
        l.run_id = "seq";
        auto seq = enact_sequential(chain, l, env.mgm, handlers);
        auto reference = artifact_bytes(chain, dir.path(), "seq");
        bool same = seq.success;
        for (int mp : {2, 4, 8}) {
            l.run_id = "par" + std::to_string(mp);
            l.max_parallel = mp;
            auto par = enact(chain, l, env.mgm, handlers);
            same = same && par.success && par.completed() == seq.completed() &&
                   artifact_bytes(chain, dir.path(), l.run_id) == reference;
        }
        if (same) {
            ++agreed;
        } else if (first_failure.empty()) {
            first_failure = "; first mismatch in trial " + std::to_string(trial);
        }
    }
    return {agreed == 100, std::to_string(agreed) + "/100 chains identical at maxParallel 2/4/8" + first_failure};
}

// 5 ------------------------------------------------------------------------

Outcome precedence_preservation() {
    Rng rng(77);
    int equal = 0;
    std::size_t max_depth = 0;
    std::size_t total_actions = 0;
    std::string first_failure;
    for (int trial = 0; trial < 100; ++trial) {
        auto gen = random_hierarchical_pm(rng, 3, 12);
        TempDir dir;
        auto root = write_pm_workspace(gen, dir.path());
        auto mgm = base_megamodel(dir.path());
        try {
            discover_workspace(dir.path(), mgm);
            auto pm = discover_pm(root, mgm, root.parent_path());
            auto chain = translate(pm.resolved, pm.weave, mgm);
            auto expected = pm_action_order(gen.root, gen.library);
            auto actual = chain_action_order(chain);
            max_depth = std::max(max_depth, pm.resolved.call_depth());
            total_actions += expected.actions.size();
            if (expected.actions == actual.actions && expected.before == actual.before) {
                ++equal;
                continue;
            }
        } catch (const Error& e) {
            if (first_failure.empty()) first_failure = std::string("; ") + e.what();
        }
        if (first_failure.empty()) first_failure = "; first mismatch in trial " + std::to_string(trial);
    }
    return {equal == 100, std::to_string(equal) + "/100 partial orders equal (" + std::to_string(total_actions) +
                              " actions, max call depth " + std::to_string(max_depth) + ")" + first_failure};
}

// 6 ------------------------------------------------------------------------

/// Appends its step id one character at a time, noting overlaps and order.
struct AppendProbe {
    std::atomic<int> inside{0};
    std::atomic<bool> overlapped{false};
    std::mutex mutex;
    std::vector<std::string> order;

    Handler handler() {
        return {"append", [this](const StepInvocation& inv) {
                    if (inside.fetch_add(1) != 0) overlapped = true;
                    {
                        std::ofstream out(inv.outputs.at(0).second, std::ios::app | std::ios::binary);
                        for (char ch : "[" + inv.step_id + "]") {
                            out << ch << std::flush;
                            std::this_thread::sleep_for(std::chrono::microseconds(300));
                        }
                    }
                    {
                        std::lock_guard lock(mutex);
                        order.push_back(inv.step_id);
                    }
                    inside.fetch_sub(1);
                    return HandlerResult{};
                }};
    }
};

Outcome writer_serialization() {
    TempDir dir;
    auto env = make_chain_env(dir.path());
    FlatGraph flat;
    flat.name = "Append";
    flat.carriers = {{"IN", "Append.IN", CarrierKind::Parameter, "m", Direction::In},
                     {"D", "Append.D", CarrierKind::Flow, "m", std::nullopt},
                     {"OUT", "Append.OUT", CarrierKind::Parameter, "m", Direction::Out}};
    const std::vector<Pin> pins = {{"i0", Direction::In, "m"}, {"o", Direction::Out, "m"}};
    flat.nodes = {{"writer.b", FlatNodeKind::Action, false, "Append", "copy", pins},
                  {"writer.a", FlatNodeKind::Action, false, "Append", "copy", pins},
                  {"reader", FlatNodeKind::Action, false, "Append", "copy", pins}};
    flat.bindings = {{0, "i0", Direction::In, 0}, {0, "o", Direction::Out, 1}, {1, "i0", Direction::In, 0},
                     {1, "o", Direction::Out, 1}, {2, "i0", Direction::In, 1}, {2, "o", Direction::Out, 2}};
    flat.control = graph::Digraph(3);
    auto chain = chain_from_flat(synthesize_concurrency(flat), env.impl,
                                 {{"writer.a", "append"}, {"writer.b", "append"}});

    int good = 0;
    std::string first_failure;
    for (int trial = 0; trial < 50; ++trial) {
        AppendProbe probe;
        auto handlers = default_handlers();
        handlers.add(probe.handler());
        LaunchConfig l;
        l.bindings["IN"] = env.input;
        l.max_parallel = 8;
        l.run_id = "w" + std::to_string(trial);
        auto report = enact(chain, l, env.mgm, handlers);
        auto content = read_text_file(run_directory(dir.path(), l.run_id) / "outputs" / "OUT");
        bool ok = report.success && !probe.overlapped &&
                  probe.order == std::vector<std::string>{"writer.a", "writer.b"} &&
                  content == "[writer.a][writer.b]";
        if (ok) {
            ++good;
        } else if (first_failure.empty()) {
            first_failure = "; trial " + std::to_string(trial) + " wrote \"" + content + "\"";
        }
    }
    return {good == 50, std::to_string(good) + "/50 trials serialized as writer.a then writer.b" + first_failure};
}

// 7 ------------------------------------------------------------------------

Outcome persistence_round_trips() {
    Rng rng(4242);
    int mgm_ok = 0, weave_ok = 0, chain_ok = 0;
    TempDir stores;
    for (int i = 0; i < 100; ++i) {
        TempDir dir;
        auto mgm = random_megamodel(rng, dir.path());
        auto path = megamodel_store_path(dir.path());
        save_megamodel(mgm, path);
        auto back = load_megamodel(path);
        mgm_ok += back == mgm && megamodel_to_json(back) == read_text_file(path);

        auto w = random_weave(rng);
        auto wpath = weave_store_path(stores.path(), "w" + std::to_string(i));
        save_weave(w, wpath);
        auto wback = load_weave(wpath);
        weave_ok += wback == w && weave_to_json(wback) == read_text_file(wpath);

        auto c = random_chain_document(rng);
        auto cpath = chain_store_path(stores.path(), "c" + std::to_string(i));
        save_chain(c, cpath);
        auto cback = load_chain(cpath);
        chain_ok += cback == c && chain_to_json(cback) == read_text_file(cpath);
    }
    bool ok = mgm_ok == 100 && weave_ok == 100 && chain_ok == 100;
    return {ok, "megamodel " + std::to_string(mgm_ok) + "/100, weave " + std::to_string(weave_ok) + "/100, chain " +
                    std::to_string(chain_ok) + "/100"};
}

// 8 ------------------------------------------------------------------------

Outcome idempotent_discovery() {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto mgm = base_megamodel(ws);
    auto first = discover_workspace(ws, mgm);
    auto snapshot = mgm;
    auto second = discover_workspace(ws, mgm);
    bool ok = !first.registered.empty() && second.registered.empty() && mgm == snapshot;
    return {ok, "first pass " + std::to_string(first.registered.size()) + ", second pass " +
                    std::to_string(second.registered.size()) + " new registrations"};
}

// 9 ------------------------------------------------------------------------

Outcome failure_semantics() {
    TempDir dir;
    auto ws = copy_fixture(dir.path());
    auto spec = read_text_file(ws / "impl" / "upload_nsd.process");
    auto cmd = spec.find("\"command\"");
    auto end = spec.find('\n', cmd);
    spec.replace(cmd, end - cmd, "\"command\": \"fail\",");
    write_file(ws / "impl" / "upload_fail.builtin", spec);
    auto pm = read_text_file(ws / "flows" / "nsonboarding.pm.json");
    auto at = pm.find("impl/upload_nsd.process");
    pm.replace(at, std::string("impl/upload_nsd.process").size(), "impl/upload_fail.builtin");
    write_file(ws / "flows" / "nsonboarding.pm.json", pm);

    auto p = translate_fixture(ws);
    auto report = enact(p.chain, fixture_launch(ws, "c9"), p.mgm, fixture_handlers());
    const std::string upload = "NSOnboarding.UploadNSD";
    if (report.success) return {false, "run succeeded"};
    if (report.failed_step != upload) return {false, "failed step \"" + report.failed_step + "\""};
    if (report.steps.at(upload).status != StepStatus::Failed) return {false, "UploadNSD not marked failed"};
    if (report.steps.at("NSOnboarding.ValidateAndCatalog").status != StepStatus::NotStarted) {
        return {false, "ValidateAndCatalog was started"};
    }

    auto cg = control_graph(p.chain);
    auto reach = graph::transitive_closure(cg.g);
    std::size_t upstream = 0, registered = 0;
    for (const auto& s : p.chain.steps) {
        if (!reach[cg.index.at(s.id)][cg.index.at(upload)]) continue;
        ++upstream;
        if (report.steps.at(s.id).status != StepStatus::Completed) return {false, s.id + " did not complete"};
        for (const auto& pin : s.out_pins) {
            const auto* node = p.chain.bound_node(s.id, pin.name, Direction::Out);
            auto rec = std::find_if(report.artifacts.begin(), report.artifacts.end(),
                                    [&](const ArtifactRecord& a) { return a.data_node == node->id; });
            if (rec == report.artifacts.end()) return {false, "no artifact for " + node->id};
            auto r = p.mgm.get(rec->resource);
            if (!r || r->meta["producer"] != s.id) return {false, node->id + " not registered with its producer"};
            ++registered;
        }
    }
    return {true, "Failed(" + upload + "), ValidateAndCatalog not started, " + std::to_string(upstream) +
                      " upstream steps with " + std::to_string(registered) + " registered artifacts"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "fixture topology", 5, fixture_topology},
        {2, "heterogeneous dispatch", 10, heterogeneous_dispatch},
        {3, "live megamodel update", 10, live_megamodel_update},
        {4, "oracle equivalence", 60, oracle_equivalence},
        {5, "precedence preservation", 30, precedence_preservation},
        {6, "writer serialization", 30, writer_serialization},
        {7, "persistence round-trips", 15, persistence_round_trips},
        {8, "idempotent discovery", 5, idempotent_discovery},
        {9, "failure semantics", 10, failure_semantics},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = secs < c.limit_s;
        bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("criterion %d: %s  %-26s %7.2fs (limit %gs)  %s%s\n", c.number, pass ? "PASS" : "FAIL",
                    c.title.c_str(), secs, c.limit_s, o.detail.c_str(), in_time ? "" : "  [over time limit]");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
