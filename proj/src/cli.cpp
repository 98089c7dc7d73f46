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

#include "maple/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "maple/chain.hpp"
#include "maple/discovery.hpp"
#include "maple/enactor.hpp"
#include "maple/json_io.hpp"
#include "maple/launch.hpp"
#include "maple/megamodel.hpp"
#include "maple/procmodel.hpp"
#include "maple/weave.hpp"

namespace fs = std::filesystem;

namespace maple {

namespace {

struct Options {
    std::string workspace;
    bool quiet = false;
    bool json = false;
};

/// Signals a user error whose diagnostics were already printed.
struct Reported {};

class Console {
public:
    Console(const Options& opts, std::ostream& out, std::ostream& err) : opts_(opts), out_(out), err_(err) {}

    std::ostream& out() { return out_; }

    void info(const std::string& line) {
        if (!opts_.quiet && !opts_.json) out_ << line << "\n";
    }

    void diagnostics(const std::vector<Diagnostic>& diags, const std::string& file = {},
                     std::string_view text = {}) {
        for (auto d : diags) {
            if (d.pos.line == 0 && !text.empty() && !d.element.empty()) {
                if (auto line = line_of_quoted(text, d.element)) d.pos = {line, 1};
            }
            if (opts_.quiet && d.severity == Severity::Warning) continue;
            if (opts_.json) {
                Json j{{"severity", d.severity == Severity::Error ? "error" : "warning"},
                       {"code", d.code},
                       {"message", d.message}};
                if (!file.empty()) j["file"] = file;
                if (!d.element.empty()) j["element"] = d.element;
                if (d.pos.line) {
                    j["line"] = d.pos.line;
                    j["column"] = d.pos.column;
                }
                err_ << j.dump() << "\n";
            } else {
                err_ << format_diagnostic(d, file) << "\n";
            }
        }
    }

    void error(const Error& e) {
        diagnostics({{Severity::Error, std::string(to_string(e.code())), e.what(), {}, e.pos()}});
    }

    void emit_json(const Json& j) {
        if (opts_.json) out_ << j.dump(2) << "\n";
    }

private:
    const Options& opts_;
    std::ostream& out_;
    std::ostream& err_;
};

fs::path workspace_of(const Options& opts) {
    std::string ws = opts.workspace;
    if (ws.empty()) {
        if (const char* env = std::getenv("MAPLE_WORKSPACE"); env && *env) ws = env;
    }
    if (ws.empty()) ws = ".";
    std::error_code ec;
    auto abs = fs::weakly_canonical(fs::absolute(ws), ec);
    if (ec || !fs::is_directory(abs)) throw Error(ErrorCode::UsageError, "workspace is not a directory: " + ws);
    return abs;
}

/// Relative paths resolve against the current directory when they exist
/// there, otherwise against the workspace.
fs::path user_path(const fs::path& ws, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path;
    std::error_code ec;
    if (fs::exists(path, ec)) return fs::weakly_canonical(fs::absolute(path), ec);
    return ws / path;
}

Megamodel open_megamodel(const fs::path& ws) {
    auto store = megamodel_store_path(ws);
    if (fs::exists(store)) return load_megamodel(store, ws);
    return base_megamodel(ws);
}

Json ids_json(const std::vector<ResourceId>& ids) {
    Json a = Json::array();
    for (const auto& id : ids) a.push_back(id.value);
    return a;
}

std::string describe(const Resource& r) {
    return r.id.value + "  " + std::string(to_string(r.kind)) + "  " + r.name + "  " + r.location;
}

struct Pipeline {
    Megamodel mgm;
    PmDiscovery pm;
    TransformationChain chain;
    fs::path chain_path;
};

/// discover -> weave -> translate, persisting every store on the way.
Pipeline run_pipeline(Console& console, const fs::path& ws, const fs::path& pm_path, bool translate_too) {
    Pipeline p{open_megamodel(ws), {}, {}, {}};
    auto report = discover_workspace(ws, p.mgm);
    console.diagnostics(report.warnings);
    p.pm = discover_pm(pm_path, p.mgm, pm_path.parent_path());
    if (translate_too) {
        p.chain = translate(p.pm.resolved, p.pm.weave, p.mgm);
        p.chain_path = chain_store_path(ws, p.chain.name);
        save_chain(p.chain, p.chain_path);
        auto id = register_file(p.chain_path, p.mgm);
        if (id) p.mgm.add_relation({RelationKind::DerivedFrom, *id, p.pm.pm});
    }
    save_megamodel(p.mgm, megamodel_store_path(ws));
    return p;
}

int cmd_init(Console& c, const fs::path& ws) {
    auto store = megamodel_store_path(ws);
    if (fs::exists(store)) {
        auto mgm = load_megamodel(store, ws);
        c.info("workspace already initialized: " + store.string() + " (" + std::to_string(mgm.resource_count()) +
               " resources)");
        return 0;
    }
    auto mgm = base_megamodel(ws);
    save_megamodel(mgm, store);
    c.info("initialized " + store.string() + " (" + std::to_string(mgm.resource_count()) + " resources)");
    c.emit_json({{"store", store.string()}, {"resources", mgm.resource_count()}});
    return 0;
}

int cmd_discover(Console& c, const fs::path& ws, const std::string& root_arg) {
    auto mgm = open_megamodel(ws);
    auto root = root_arg.empty() ? ws : user_path(ws, root_arg);
    auto report = discover_workspace(root, mgm);
    save_megamodel(mgm, megamodel_store_path(ws));
    c.diagnostics(report.warnings);
    c.info("registered " + std::to_string(report.registered.size()) + " new resource(s)");
    for (const auto& id : report.registered) c.info("  " + describe(mgm.at(id)));
    for (const auto& [path, reason] : report.skipped) c.info("  skipped " + path + ": " + reason);
    Json skipped = Json::array();
    for (const auto& [path, reason] : report.skipped) skipped.push_back({{"path", path}, {"reason", reason}});
    c.emit_json({{"registered", ids_json(report.registered)}, {"skipped", skipped}});
    return 0;
}

int cmd_register(Console& c, const fs::path& ws, const std::string& path) {
    auto mgm = open_megamodel(ws);
    auto before = mgm.resource_count();
    auto id = register_file(user_path(ws, path), mgm);
    if (!id) {
        throw Error(ErrorCode::UsageError, "no loader claims " + path + " (model instances need a .conforms sidecar)");
    }
    save_megamodel(mgm, megamodel_store_path(ws));
    bool fresh = mgm.resource_count() > before;
    c.info((fresh ? "registered " : "already registered ") + describe(mgm.at(*id)));
    c.emit_json({{"id", id->value}, {"new", fresh}});
    return 0;
}

int cmd_mgm_show(Console& c, const fs::path& ws, bool dot, bool json) {
    auto mgm = open_megamodel(ws);
    if (dot) {
        c.out() << megamodel_to_dot(mgm);
    } else if (json) {
        c.out() << megamodel_to_json(mgm);
    } else {
        c.out() << megamodel_to_table(mgm);
    }
    return 0;
}

int cmd_pm_validate(Console& c, const fs::path& ws, const std::string& path_arg) {
    auto path = user_path(ws, path_arg);
    auto text = read_text_file(path);
    ProcessModel pm;
    try {
        pm = parse_pm(text);
    } catch (const Error& e) {
        c.diagnostics({{Severity::Error, std::string(to_string(e.code())), e.what(), {}, e.pos()}}, path_arg);
        throw Reported{};
    }
    auto diags = validate_pm(pm);
    if (!has_errors(diags) && !pm.calls.empty()) {
        try {
            std::vector<Diagnostic> problems;
            std::map<std::string, ProcessModel> library;
            for (auto& [name, entry] : scan_pm_library(path.parent_path(), &problems)) library.emplace(name, entry.model);
            resolve_calls(pm, library);
        } catch (const Error& e) {
            diags.push_back({Severity::Error, std::string(to_string(e.code())), e.what(), {}, e.pos()});
        }
    }
    c.diagnostics(diags, path_arg, text);
    if (has_errors(diags)) throw Reported{};
    c.info(path_arg + ": ok (" + std::to_string(pm.nodes.size()) + " nodes, " + std::to_string(pm.edges.size()) +
           " edges)");
    c.emit_json({{"file", path_arg}, {"valid", true}});
    return 0;
}

int cmd_weave(Console& c, const fs::path& ws, const std::string& pm_arg) {
    auto p = run_pipeline(c, ws, user_path(ws, pm_arg), false);
    const auto& w = p.pm.weave;
    auto store = weave_store_path(ws, p.pm.resolved.root->name);
    c.info("weave model " + store.string() + ": " + std::to_string(w.count(MappingKind::ActionMapping)) +
           " action, " + std::to_string(w.count(MappingKind::ObjectNodeMapping)) + " object-node, " +
           std::to_string(w.count(MappingKind::InOutMapping)) + " in/out mappings");
    c.emit_json(parse_json(weave_to_json(w), ErrorCode::MalformedStore, "weave"));
    return 0;
}

int cmd_translate(Console& c, const fs::path& ws, const std::string& pm_arg, const std::string& dot_out, bool dot) {
    auto p = run_pipeline(c, ws, user_path(ws, pm_arg), true);
    const auto& chain = p.chain;
    if (!dot_out.empty()) write_text_file(fs::absolute(dot_out), export_dot(chain));
    if (dot) {
        c.out() << export_dot(chain);
        return 0;
    }
    c.info("chain " + chain.name + ": " + std::to_string(chain.steps.size()) + " steps, " +
           std::to_string(chain.gateways.size()) + " gateways, " + std::to_string(chain.data_nodes.size()) +
           " data nodes -> " + p.chain_path.string());
    c.emit_json(parse_json(chain_to_json(chain), ErrorCode::MalformedStore, "chain"));
    return 0;
}

int cmd_enact(Console& c, const fs::path& ws, const std::string& pm_arg, const std::string& config_arg) {
    auto config_path = user_path(ws, config_arg);
    auto config_text = read_text_file(config_path);
    std::vector<Diagnostic> warnings;
    LaunchConfig launch;
    try {
        launch = parse_launch_config(config_text, &warnings);
    } catch (const Error& e) {
        c.diagnostics({{Severity::Error, std::string(to_string(e.code())), e.what(), {}, e.pos()}}, config_arg);
        throw Reported{};
    }
    c.diagnostics(warnings, config_arg);

    auto p = run_pipeline(c, ws, user_path(ws, pm_arg), true);
    auto diags = validate_chain(p.chain, p.mgm, launch);
    c.diagnostics(diags, config_arg);
    if (has_errors(diags)) throw Reported{};

    auto report = enact(p.chain, launch, p.mgm, default_handlers());
    save_megamodel(p.mgm, megamodel_store_path(ws));
    auto report_path = run_directory(ws, report.run_id) / "report.json";
    if (report.success) {
        c.info("run " + report.run_id + ": Success, " + std::to_string(report.artifacts.size()) + " artifact(s), " +
               std::to_string(report.mgm_delta.size()) + " new megamodel resource(s)");
        c.info("report: " + report_path.string());
    } else {
        c.diagnostics({{Severity::Error, "StepFailed",
                        "run " + report.run_id + " failed" +
                            (report.failed_step.empty() ? "" : " at step \"" + report.failed_step + "\"") + ": " +
                            report.message,
                        report.failed_step, {}}});
        c.info("report: " + report_path.string());
    }
    c.emit_json({{"runId", report.run_id}, {"success", report.success}, {"report", report_path.string()}});
    return report.success ? 0 : 1;
}

int cmd_report(Console& c, const fs::path& ws, const std::string& run_id, bool json) {
    auto path = run_directory(ws, run_id) / "report.json";
    if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "no report for run \"" + run_id + "\"");
    auto text = read_text_file(path);
    if (json) {
        c.out() << text;
        return 0;
    }
    auto r = report_from_json(text);
    auto& out = c.out();
    out << "run " << r.run_id << ": " << (r.success ? "Success" : "Failed");
    if (!r.failed_step.empty()) out << " at " << r.failed_step;
    out << "\n";
    std::size_t width = 4;
    for (const auto& [id, rec] : r.steps) width = std::max(width, id.size());
    for (const auto& [id, rec] : r.steps) {
        out << "  " << std::left << std::setw(static_cast<int>(width)) << id << "  " << std::setw(11)
            << to_string(rec.status) << "  " << rec.handler_kind;
        if (rec.started_at_ms && rec.ended_at_ms) out << "  " << (*rec.ended_at_ms - *rec.started_at_ms) << " ms";
        out << "\n";
    }
    for (const auto& a : r.artifacts) out << "  artifact " << a.data_node << " -> " << a.path << " (" << a.resource.value << ")\n";
    return r.success ? 0 : 1;
}

int cmd_run_step(Console& c, const std::string& op, const std::vector<std::string>& ins,
                 const std::vector<std::string>& outs) {
    std::vector<fs::path> in_paths(ins.begin(), ins.end());
    std::vector<fs::path> out_paths(outs.begin(), outs.end());
    const char* step = std::getenv("MAPLE_STEP_ID");
    auto outcome = run_builtin_op(op, in_paths, out_paths, step && *step ? step : "run-step");
    if (outcome.exit_code != 0) {
        c.diagnostics({{Severity::Error, "NonZeroExit", outcome.message, {}, {}}});
    }
    return outcome.exit_code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options opts;
    CLI::App app{"maple: megamodel-driven process enactment", "maple"};
    app.require_subcommand(1);
    app.add_option("--workspace,-w", opts.workspace, "Workspace directory (default: $MAPLE_WORKSPACE or .)");
    app.add_flag("--quiet,-q", opts.quiet, "Only print errors");
    app.add_flag("--json", opts.json, "Machine-readable output and diagnostics");

    std::string path, root, config, dot_out, op;
    std::vector<std::string> ins, outs;
    bool dot = false;

    auto* init = app.add_subcommand("init", "Create the workspace megamodel store");
    auto* discover = app.add_subcommand("discover", "Register every recognised file of the workspace");
    discover->add_option("root", root, "Directory to walk (default: workspace)");
    auto* reg = app.add_subcommand("register", "Register one file");
    reg->add_option("path", path)->required();
    auto* mgm = app.add_subcommand("mgm", "Megamodel commands");
    mgm->require_subcommand(1);
    auto* show = mgm->add_subcommand("show", "Print the megamodel");
    show->add_flag("--dot", dot, "Graphviz output");
    auto* pm = app.add_subcommand("pm", "Process model commands");
    pm->require_subcommand(1);
    auto* validate = pm->add_subcommand("validate", "Check a process model");
    validate->add_option("path", path)->required();
    auto* weave_cmd = app.add_subcommand("weave", "Discover a process model and weave it");
    weave_cmd->add_option("pm", path)->required();
    auto* translate_cmd = app.add_subcommand("translate", "Build the transformation chain of a process model");
    translate_cmd->add_option("pm", path)->required();
    translate_cmd->add_option("--dot-out", dot_out, "Write the chain as Graphviz to this file");
    translate_cmd->add_flag("--dot", dot, "Print the chain as Graphviz");
    auto* enact_cmd = app.add_subcommand("enact", "Run discover, weave, translate, validate and enact");
    enact_cmd->add_option("pm", path)->required();
    enact_cmd->add_option("--config,-c", config, "Launch configuration")->required();
    auto* report = app.add_subcommand("report", "Summarise a finished run");
    report->add_option("runId", root)->required();
    auto* run_step = app.add_subcommand("run-step", "Run one builtin operation");
    run_step->add_option("op", op, "copy | concat | template | fail")->required();
    run_step->add_option("--in", ins, "Input file (repeatable)");
    run_step->add_option("--out", outs, "Output file (repeatable)");

    Console console(opts, out, err);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "maple: " << e.what() << "\n";
        err << "run 'maple --help' for usage\n";
        return 1;
    }

    try {
        if (run_step->parsed()) return cmd_run_step(console, op, ins, outs);
        auto ws = workspace_of(opts);
        if (init->parsed()) return cmd_init(console, ws);
        if (discover->parsed()) return cmd_discover(console, ws, root);
        if (reg->parsed()) return cmd_register(console, ws, path);
        if (show->parsed()) return cmd_mgm_show(console, ws, dot, opts.json);
        if (validate->parsed()) return cmd_pm_validate(console, ws, path);
        if (weave_cmd->parsed()) return cmd_weave(console, ws, path);
        if (translate_cmd->parsed()) return cmd_translate(console, ws, path, dot_out, dot);
        if (enact_cmd->parsed()) return cmd_enact(console, ws, path, config);
        if (report->parsed()) return cmd_report(console, ws, root, opts.json);
        err << "maple: no command\n";
        return 1;
    } catch (const Reported&) {
        return 1;
    } catch (const Error& e) {
        console.error(e);
        return 1;
    } catch (const std::exception& e) {
        err << "maple: internal error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace maple
