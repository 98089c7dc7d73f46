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

#include "maple/enactor.hpp"

#include <algorithm>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple {

namespace {

constexpr std::pair<StepStatus, std::string_view> kStatusNames[] = {
    {StepStatus::NotStarted, "not-started"},
    {StepStatus::Running, "running"},
    {StepStatus::Completed, "completed"},
    {StepStatus::Failed, "failed"},
};

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string generated_run_id() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &tm);
    std::random_device rd;
    char suffix[8];
    std::snprintf(suffix, sizeof suffix, "%04x", static_cast<unsigned>(rd() & 0xffff));
    return std::string("run-") + stamp + "-" + suffix;
}

/// State shared by both interpreters: resolved paths, metamodel ids and the
/// report under construction.
struct Run {
    const TransformationChain& chain;
    const LaunchConfig& launch;
    Megamodel& mgm;
    const HandlerRegistry& handlers;
    std::string run_id;
    fs::path run_dir;
    std::map<std::string, fs::path> path_of;          // data node -> absolute path
    std::map<std::string, ResourceId> metamodel_of;  // data node -> descriptor
    std::set<ResourceId> before;
    std::set<std::string> recorded;
    EnactmentReport report;

    Run(const TransformationChain& c, const LaunchConfig& l, Megamodel& m, const HandlerRegistry& h)
        : chain(c), launch(l), mgm(m), handlers(h) {
        auto diags = validate_chain(chain, mgm, launch);
        if (has_errors(diags)) {
            std::string msg = "chain \"" + chain.name + "\" is not enactable:";
            for (const auto& d : diags) {
                if (d.severity == Severity::Error) msg += "\n  " + format_diagnostic(d);
            }
            throw Error(ErrorCode::ValidationFailed, msg);
        }
        for (const auto& s : chain.steps) {
            if (!handlers.find(s.handler_kind)) {
                throw Error(ErrorCode::HandlerMissing,
                            "no handler for kind \"" + s.handler_kind + "\" used by step \"" + s.id + "\"");
            }
        }
        run_id = launch.run_id.empty() ? generated_run_id() : launch.run_id;
        run_dir = run_directory(mgm.workspace_root(), run_id);
        for (const auto& d : chain.data_nodes) {
            metamodel_of.emplace(d.id, *mgm.metamodel_by_name(d.metamodel));
            fs::path p;
            if (d.binding.kind == BindingKind::LaunchParameter) {
                auto b = launch.bindings.find(d.binding.value);
                p = b != launch.bindings.end() ? mgm.absolute_path(mgm.relative_location(b->second))
                                               : run_dir / "outputs" / d.binding.value;
            } else if (d.binding.kind == BindingKind::Artifact) {
                p = mgm.absolute_path(d.binding.value);
            } else {
                p = run_dir / "intermediates" / d.id;
            }
            path_of.emplace(d.id, p);
        }
        std::error_code ec;
        for (const char* sub : {"intermediates", "outputs", "logs"}) fs::create_directories(run_dir / sub, ec);
        for (const auto& r : mgm.resources()) before.insert(r.id);

        report.run_id = run_id;
        for (const auto& s : chain.steps) report.steps[s.id].handler_kind = s.handler_kind;
    }

    StepInvocation invocation(const Step& step) const {
        StepInvocation inv;
        inv.step_id = step.id;
        inv.run_id = run_id;
        inv.impl = mgm.at(step.impl);
        inv.impl_path = mgm.absolute_path(inv.impl.location);
        inv.workspace = mgm.workspace_root().empty() ? fs::current_path() : mgm.workspace_root();
        for (const auto& p : step.in_pins) {
            inv.inputs.emplace_back(p.name, path_of.at(chain.bound_node(step.id, p.name, Direction::In)->id));
        }
        for (const auto& p : step.out_pins) {
            auto path = path_of.at(chain.bound_node(step.id, p.name, Direction::Out)->id);
            std::error_code ec;
            fs::create_directories(path.parent_path(), ec);
            inv.outputs.emplace_back(p.name, path);
        }
        inv.env = launch.env;
        inv.env["MAPLE_STEP_ID"] = step.id;
        inv.env["MAPLE_RUN_ID"] = run_id;
        inv.env["MAPLE_WORKSPACE"] = inv.workspace.string();
        inv.stdout_log = run_dir / "logs" / (step.id + ".out");
        inv.stderr_log = run_dir / "logs" / (step.id + ".err");
        return inv;
    }

    /// Runs the handler and checks declared outputs. Never throws.
    HandlerResult invoke(const Step& step, const StepInvocation& inv) const {
        HandlerResult r;
        try {
            r = handlers.find(step.handler_kind)->run(inv);
        } catch (const Error& e) {
            return {false, -1, e.code(), e.what()};
        } catch (const std::exception& e) {
            return {false, -1, std::nullopt, e.what()};
        }
        if (!r.ok) return r;
        for (const auto& [pin, path] : inv.outputs) {
            std::error_code ec;
            if (!fs::is_regular_file(path, ec)) {
                return {false, r.exit_code, ErrorCode::MissingDeclaredOutput,
                        "step \"" + step.id + "\" did not produce output pin \"" + pin + "\" (" + path.string() + ")"};
            }
        }
        return r;
    }

    /// Registers every output of a completed step. Returns false (and marks
    /// the step failed) when registration is impossible.
    bool record_outputs(const Step& step, HandlerResult& r) {
        try {
            for (const auto& p : step.out_pins) {
                const auto* node = chain.bound_node(step.id, p.name, Direction::Out);
                const auto& path = path_of.at(node->id);
                auto id = mgm.record_artifact(path, metamodel_of.at(node->id), step.id, node->id);
                if (recorded.insert(node->id).second) {
                    report.artifacts.push_back({node->id, mgm.relative_location(path), id, step.id});
                }
            }
            return true;
        } catch (const Error& e) {
            r = {false, r.exit_code, e.code(), e.what()};
            return false;
        }
    }

    void settle(const Step& step, HandlerResult r, std::int64_t started) {
        if (r.ok) record_outputs(step, r);
        auto& rec = report.steps[step.id];
        rec.started_at_ms = started;
        rec.ended_at_ms = now_ms();
        rec.exit_code = r.exit_code;
        rec.message = r.message;
        rec.error = r.error ? std::string(to_string(*r.error)) : std::string{};
        rec.status = r.ok ? StepStatus::Completed : StepStatus::Failed;
        if (!r.ok && report.failed_step.empty()) {
            report.failed_step = step.id;
            report.message = r.message;
        }
    }

    EnactmentReport finish() {
        report.success = report.failed_step.empty() &&
                         std::all_of(report.steps.begin(), report.steps.end(),
                                     [](const auto& e) { return e.second.status == StepStatus::Completed; });
        if (!report.success && report.failed_step.empty() && report.message.empty()) {
            report.message = "enactment stalled before every step ran";
        }
        for (const auto& r : mgm.resources()) {
            if (!before.count(r.id)) report.mgm_delta.push_back(r.id);
        }
        write_text_file(run_dir / "report.json", report_to_json(report));
        return std::move(report);
    }
};

/// Per-step lists of unordered co-writers with a smaller id.
std::vector<std::vector<std::size_t>> serialization_predecessors(const TransformationChain& chain,
                                                                 const ControlGraph& cg,
                                                                 const graph::Reachability& reach) {
    std::vector<std::set<std::size_t>> preds(cg.step_count);
    for (const auto& d : chain.data_nodes) {
        auto ws = chain.writers(d.id);  // sorted
        for (std::size_t i = 0; i < ws.size(); ++i) {
            for (std::size_t j = i + 1; j < ws.size(); ++j) {
                auto a = cg.index.at(ws[i]);
                auto b = cg.index.at(ws[j]);
                if (!reach[a][b] && !reach[b][a]) preds[b].insert(a);
            }
        }
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto& s : preds) out.emplace_back(s.begin(), s.end());
    return out;
}

struct StepData {
    std::vector<std::string> reads;
    std::vector<std::string> writes;
};

std::vector<StepData> step_data(const TransformationChain& chain) {
    std::vector<StepData> out(chain.steps.size());
    for (std::size_t i = 0; i < chain.steps.size(); ++i) {
        const auto& s = chain.steps[i];
        for (const auto& p : s.in_pins) out[i].reads.push_back(chain.bound_node(s.id, p.name, Direction::In)->id);
        for (const auto& p : s.out_pins) out[i].writes.push_back(chain.bound_node(s.id, p.name, Direction::Out)->id);
    }
    return out;
}

/// Number of writers per data node; a node is ready once all of them completed.
std::map<std::string, std::size_t> writer_counts(const TransformationChain& chain) {
    std::map<std::string, std::size_t> out;
    for (const auto& d : chain.data_nodes) out[d.id] = chain.writers(d.id).size();
    return out;
}

class Coordinator {
public:
    explicit Coordinator(Run& run)
        : run_(run), chain_(run.chain), cg_(control_graph(chain_)), data_(step_data(chain_)),
          pending_writers_(writer_counts(chain_)) {
        auto reach = graph::transitive_closure(cg_.g);
        serial_ = serialization_predecessors(chain_, cg_, reach);
        for (auto [u, v] : cg_.g.edges()) {
            in_edges_.resize(cg_.ids.size());
            out_edges_.resize(cg_.ids.size());
            in_edges_[v].push_back(edges_.size());
            out_edges_[u].push_back(edges_.size());
            edges_.emplace_back(u, v);
        }
        in_edges_.resize(cg_.ids.size());
        out_edges_.resize(cg_.ids.size());
        tokens_.assign(edges_.size(), 0);
        fired_.assign(cg_.ids.size(), 0);
        done_.assign(cg_.step_count, 0);
        order_.resize(cg_.ids.size());
        for (std::size_t v = 0; v < order_.size(); ++v) order_[v] = v;
        std::sort(order_.begin(), order_.end(), [&](auto a, auto b) { return cg_.ids[a] < cg_.ids[b]; });
    }

    void run() {
        const auto limit = static_cast<std::size_t>(std::max(1, run_.launch.max_parallel));
        std::unique_lock lock(mutex_);
        for (;;) {
            for (bool progress = true; progress;) {
                progress = false;
                for (auto v : order_) {
                    if (cg_.is_step(v) || fired_[v] || !has_tokens(v)) continue;
                    fire(v);
                    emit(v);
                    run_.report.firing_order.push_back(cg_.ids[v]);
                    progress = true;
                }
                if (failed_) continue;
                for (auto v : order_) {
                    if (running_ >= limit) break;
                    if (!cg_.is_step(v) || fired_[v] || !startable(v)) continue;
                    start(v);
                    progress = true;
                }
            }
            if (running_ == 0) break;
            cv_.wait(lock, [&] { return !completions_.empty(); });
            while (!completions_.empty()) {
                auto c = std::move(completions_.front());
                completions_.pop_front();
                complete(c.step, std::move(c.result), c.started);
            }
        }
        lock.unlock();
        for (auto& t : threads_) t.join();
    }

private:
    struct Completion {
        std::size_t step;
        HandlerResult result;
        std::int64_t started;
    };

    bool has_tokens(std::size_t v) const {
        return std::all_of(in_edges_[v].begin(), in_edges_[v].end(), [&](auto e) { return tokens_[e] > 0; });
    }

    void fire(std::size_t v) {
        fired_[v] = 1;
        for (auto e : in_edges_[v]) --tokens_[e];
    }

    void emit(std::size_t v) {
        for (auto e : out_edges_[v]) ++tokens_[e];
    }

    bool startable(std::size_t s) const {
        if (!has_tokens(s)) return false;
        const auto& d = data_[s];
        for (const auto& n : d.reads) {
            if (pending_writers_.at(n) > 0 || writing_.count(n)) return false;
        }
        for (const auto& n : d.writes) {
            if (writing_.count(n) || reading_.count(n)) return false;
        }
        return std::all_of(serial_[s].begin(), serial_[s].end(), [&](auto p) { return done_[p] != 0; });
    }

    void start(std::size_t s) {
        fire(s);
        ++running_;
        for (const auto& n : data_[s].reads) ++reading_[n];
        for (const auto& n : data_[s].writes) writing_.insert(n);
        const auto& step = chain_.steps[s];
        run_.report.steps[step.id].status = StepStatus::Running;
        run_.report.firing_order.push_back(step.id);
        auto started = now_ms();
        StepInvocation inv;
        try {
            inv = run_.invocation(step);
        } catch (const Error& e) {
            completions_.push_back({s, {false, -1, e.code(), e.what()}, started});
            return;
        }
        threads_.emplace_back([this, s, started, inv = std::move(inv)] {
            auto result = run_.invoke(chain_.steps[s], inv);
            std::lock_guard guard(mutex_);
            completions_.push_back({s, std::move(result), started});
            cv_.notify_one();
        });
    }

    void complete(std::size_t s, HandlerResult result, std::int64_t started) {
        --running_;
        for (const auto& n : data_[s].reads) {
            if (--reading_[n] == 0) reading_.erase(n);
        }
        for (const auto& n : data_[s].writes) writing_.erase(n);
        const auto& step = chain_.steps[s];
        run_.settle(step, std::move(result), started);
        if (run_.report.steps[step.id].status != StepStatus::Completed) {
            failed_ = true;
            return;
        }
        done_[s] = 1;
        for (const auto& n : data_[s].writes) --pending_writers_[n];
        emit(s);
    }

    Run& run_;
    const TransformationChain& chain_;
    ControlGraph cg_;
    std::vector<StepData> data_;
    std::map<std::string, std::size_t> pending_writers_;
    std::vector<std::vector<std::size_t>> serial_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<std::vector<std::size_t>> in_edges_, out_edges_;
    std::vector<int> tokens_;
    std::vector<char> fired_;
    std::vector<char> done_;
    std::vector<std::size_t> order_;
    std::map<std::string, int> reading_;
    std::set<std::string> writing_;
    std::size_t running_ = 0;
    bool failed_ = false;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Completion> completions_;
    std::vector<std::thread> threads_;
};

}  // namespace

std::string_view to_string(StepStatus status) {
    for (auto [s, name] : kStatusNames) {
        if (s == status) return name;
    }
    return "?";
}

std::vector<std::string> EnactmentReport::completed() const {
    std::vector<std::string> out;
    for (const auto& [id, rec] : steps) {
        if (rec.status == StepStatus::Completed) out.push_back(id);
    }
    return out;
}

fs::path run_directory(const fs::path& workspace_root, std::string_view run_id) {
    return workspace_root / ".maple" / "runs" / std::string(run_id);
}

EnactmentReport enact(const TransformationChain& chain, const LaunchConfig& launch, Megamodel& mgm,
                      const HandlerRegistry& handlers) {
    Run run(chain, launch, mgm, handlers);
    Coordinator(run).run();
    return run.finish();
}

EnactmentReport enact_sequential(const TransformationChain& chain, const LaunchConfig& launch, Megamodel& mgm,
                                 const HandlerRegistry& handlers) {
    Run run(chain, launch, mgm, handlers);
    auto cg = control_graph(chain);
    auto reach = graph::transitive_closure(cg.g);
    auto serial = serialization_predecessors(chain, cg, reach);
    auto data = step_data(chain);

    std::set<std::string> completed;
    auto node_ready = [&](const std::string& node) {
        auto ws = chain.writers(node);
        return std::all_of(ws.begin(), ws.end(), [&](const auto& w) { return completed.count(w) > 0; });
    };
    auto eligible = [&](std::size_t s) {
        for (std::size_t u = 0; u < cg.step_count; ++u) {
            if (reach[u][s] && !completed.count(cg.ids[u])) return false;
        }
        for (auto p : serial[s]) {
            if (!completed.count(cg.ids[p])) return false;
        }
        return std::all_of(data[s].reads.begin(), data[s].reads.end(), node_ready);
    };

    std::vector<std::size_t> by_id(cg.step_count);
    for (std::size_t s = 0; s < cg.step_count; ++s) by_id[s] = s;
    std::sort(by_id.begin(), by_id.end(), [&](auto a, auto b) { return cg.ids[a] < cg.ids[b]; });

    for (;;) {
        auto next = std::find_if(by_id.begin(), by_id.end(),
                                 [&](auto s) { return !completed.count(cg.ids[s]) && eligible(s); });
        if (next == by_id.end()) break;
        const auto& step = chain.steps[*next];
        run.report.firing_order.push_back(step.id);
        auto started = now_ms();
        HandlerResult result;
        try {
            result = run.invoke(step, run.invocation(step));
        } catch (const Error& e) {
            result = {false, -1, e.code(), e.what()};
        }
        run.settle(step, std::move(result), started);
        if (run.report.steps[step.id].status != StepStatus::Completed) break;
        completed.insert(step.id);
    }
    return run.finish();
}

std::string report_to_json(const EnactmentReport& report) {
    Json doc = Json::object();
    doc["runId"] = report.run_id;
    Json outcome{{"status", report.success ? "Success" : "Failed"}};
    if (!report.failed_step.empty()) outcome["failedStep"] = report.failed_step;
    if (!report.message.empty()) outcome["message"] = report.message;
    doc["outcome"] = std::move(outcome);
    Json steps = Json::object();
    for (const auto& [id, rec] : report.steps) {
        Json j{{"status", to_string(rec.status)}, {"handler", rec.handler_kind}};
        if (rec.started_at_ms) j["startedAt"] = *rec.started_at_ms;
        if (rec.ended_at_ms) j["endedAt"] = *rec.ended_at_ms;
        if (rec.status == StepStatus::Completed || rec.status == StepStatus::Failed) j["exitCode"] = rec.exit_code;
        if (!rec.error.empty()) j["error"] = rec.error;
        if (!rec.message.empty()) j["message"] = rec.message;
        steps[id] = std::move(j);
    }
    doc["steps"] = std::move(steps);
    Json artifacts = Json::array();
    for (const auto& a : report.artifacts) {
        artifacts.push_back(
            Json{{"dataNode", a.data_node}, {"path", a.path}, {"resource", a.resource.value}, {"producer", a.producer}});
    }
    doc["artifacts"] = std::move(artifacts);
    Json delta = Json::array();
    for (const auto& id : report.mgm_delta) delta.push_back(id.value);
    doc["mgmDelta"] = std::move(delta);
    doc["firingOrder"] = report.firing_order;
    return dump_json(doc);
}

EnactmentReport report_from_json(std::string_view text) {
    constexpr auto kCode = ErrorCode::MalformedStore;
    auto doc = parse_json(text, kCode, "report");
    EnactmentReport r;
    r.run_id = require_string(doc, "runId", kCode, "report");
    const auto& outcome = require_member(doc, "outcome", kCode, "report");
    r.success = require_string(outcome, "status", kCode, "report.outcome") == "Success";
    r.failed_step = optional_string(outcome, "failedStep", kCode, "report.outcome");
    r.message = optional_string(outcome, "message", kCode, "report.outcome");
    for (const auto& [id, j] : require_member(doc, "steps", kCode, "report").items()) {
        auto ctx = "report.steps." + id;
        StepRecord rec;
        auto status = require_string(j, "status", kCode, ctx);
        auto it = std::find_if(std::begin(kStatusNames), std::end(kStatusNames),
                               [&](const auto& e) { return e.second == status; });
        if (it == std::end(kStatusNames)) throw Error(kCode, ctx + ": unknown status \"" + status + "\"");
        rec.status = it->first;
        rec.handler_kind = require_string(j, "handler", kCode, ctx);
        if (j.contains("startedAt")) rec.started_at_ms = j["startedAt"].get<std::int64_t>();
        if (j.contains("endedAt")) rec.ended_at_ms = j["endedAt"].get<std::int64_t>();
        if (j.contains("exitCode")) rec.exit_code = j["exitCode"].get<int>();
        rec.error = optional_string(j, "error", kCode, ctx);
        rec.message = optional_string(j, "message", kCode, ctx);
        r.steps[id] = std::move(rec);
    }
    for (const auto& a : require_member(doc, "artifacts", kCode, "report")) {
        r.artifacts.push_back({require_string(a, "dataNode", kCode, "report.artifacts"),
                               require_string(a, "path", kCode, "report.artifacts"),
                               ResourceId{require_string(a, "resource", kCode, "report.artifacts")},
                               require_string(a, "producer", kCode, "report.artifacts")});
    }
    for (const auto& id : require_member(doc, "mgmDelta", kCode, "report")) r.mgm_delta.push_back({id.get<std::string>()});
    if (doc.contains("firingOrder")) r.firing_order = doc["firingOrder"].get<std::vector<std::string>>();
    return r;
}

}  // namespace maple
