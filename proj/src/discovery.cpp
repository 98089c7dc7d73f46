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

#include "maple/discovery.hpp"

#include <algorithm>
#include <set>

#include "maple/flatten.hpp"
#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple {

const ExecParameter* ExecSpec::find_parameter(std::string_view param) const {
    for (const auto& p : parameters) {
        if (p.name == param) return &p;
    }
    return nullptr;
}

const ExecParameter* ExecSpec::find_by_ref(std::string_view model_ref, Direction direction) const {
    for (const auto& p : parameters) {
        if (p.model_ref == model_ref && p.direction == direction) return &p;
    }
    return nullptr;
}

std::vector<std::string> command_placeholders(std::string_view command) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while ((at = command.find('{', at)) != std::string_view::npos) {
        auto close = command.find('}', at);
        if (close == std::string_view::npos) break;
        out.emplace_back(command.substr(at + 1, close - at - 1));
        at = close + 1;
    }
    return out;
}

ExecSpec parse_exec_spec(std::string_view text) {
    constexpr auto kCode = ErrorCode::SyntaxError;
    auto doc = parse_json(text, kCode, "executable spec");
    ExecSpec spec;
    spec.name = require_string(doc, "name", kCode, "executable spec");
    spec.command = require_string(doc, "command", kCode, "executable spec");
    if (spec.command.empty()) throw Error(kCode, "executable spec \"" + spec.name + "\": empty command");
    const auto& params = require_member(doc, "parameters", kCode, "executable spec");
    if (!params.is_array()) throw Error(kCode, "executable spec: parameters must be an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto ctx = "executable spec: parameters[" + std::to_string(i) + "]";
        const auto& j = params[i];
        ExecParameter p;
        p.name = require_string(j, "name", kCode, ctx);
        auto dir = parse_direction(require_string(j, "direction", kCode, ctx));
        if (!dir) throw Error(kCode, ctx + ": direction must be \"in\" or \"out\"");
        p.direction = *dir;
        p.metamodel = require_string(j, "metamodel", kCode, ctx);
        p.model_ref = optional_string(j, "modelRef", kCode, ctx);
        if (p.model_ref.empty()) p.model_ref = p.name;
        if (p.name.empty()) throw Error(kCode, ctx + ": empty parameter name");
        if (!names.insert(p.name).second) {
            throw Error(kCode, "executable spec \"" + spec.name + "\": duplicate parameter \"" + p.name + "\"",
                        position_of(text, text.rfind("\"" + p.name + "\"")));
        }
        spec.parameters.push_back(std::move(p));
    }
    for (const auto& ph : command_placeholders(spec.command)) {
        if (!spec.find_parameter(ph)) {
            throw Error(ErrorCode::UnboundPlaceholder,
                        "executable spec \"" + spec.name + "\": command references unknown parameter {" + ph + "}");
        }
    }
    return spec;
}

ExecSpec load_exec_spec(const fs::path& path) {
    auto text = read_text_file(path);
    try {
        return parse_exec_spec(text);
    } catch (const Error& e) {
        throw Error(e.code(), path.generic_string() + ": " + e.what(), e.pos());
    }
}

bool LoaderSpec::matches(const fs::path& path) const {
    auto file = path.filename().string();
    return std::any_of(extensions.begin(), extensions.end(), [&](const std::string& ext) {
        return file.size() > ext.size() && file.ends_with(ext);
    });
}

namespace {

LoaderExtract extract_metamodel(const fs::path& path) {
    constexpr auto kCode = ErrorCode::SyntaxError;
    auto doc = parse_json(read_text_file(path), kCode, path.generic_string());
    LoaderExtract x;
    x.name = require_string(doc, "name", kCode, path.generic_string());
    x.metamodel = "core";
    if (auto doc_text = optional_string(doc, "doc", kCode, path.generic_string()); !doc_text.empty()) {
        x.meta["doc"] = doc_text;
    }
    return x;
}

LoaderExtract extract_pm(const fs::path& path) {
    auto pm = load_pm(path);
    return {pm.name, "pm", {}};
}

LoaderExtract extract_exec(const fs::path& path, std::string handler) {
    auto spec = load_exec_spec(path);
    LoaderExtract x{spec.name, "process", {{"handler", std::move(handler)}, {"command", spec.command}}};
    return x;
}

LoaderExtract extract_store(const fs::path& path, const char* suffix, const char* metamodel) {
    auto name = path.filename().string();
    name.resize(name.size() - std::char_traits<char>::length(suffix));
    return {name, metamodel, {}};
}

const fs::path kManifest = fs::path(".maple") / "manifest.json";

std::optional<std::string> sidecar_metamodel(const fs::path& abs) {
    auto sidecar = abs;
    sidecar += ".conforms";
    std::error_code ec;
    if (!fs::is_regular_file(sidecar, ec)) return std::nullopt;
    auto text = read_text_file(sidecar);
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return std::string{};
    auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

ResourceId register_extracted(const fs::path& path, Megamodel& mgm, ResourceKind kind, LoaderExtract x,
                              std::string_view loader, std::vector<Diagnostic>* warnings) {
    ResourceDraft d;
    d.kind = kind;
    d.name = std::move(x.name);
    d.location = mgm.relative_location(path);
    if (x.metamodel) {
        auto mm = mgm.metamodel_by_name(*x.metamodel);
        if (!mm) {
            throw Error(ErrorCode::UnknownMetamodel,
                        path.generic_string() + ": unknown metamodel \"" + *x.metamodel + "\"");
        }
        d.metamodel = *mm;
    }
    d.meta = std::move(x.meta);
    d.meta["loader"] = std::string(loader);
    return mgm.register_resource(std::move(d), warnings);
}

fs::path absolute_in(const Megamodel& mgm, const fs::path& path) {
    if (path.is_absolute() || mgm.workspace_root().empty()) return path;
    return mgm.workspace_root() / path;
}

}  // namespace

std::vector<LoaderSpec> default_loaders() {
    std::vector<LoaderSpec> loaders;
    loaders.push_back({"metamodel", {".mm.json"}, ResourceKind::MetamodelDescriptor, extract_metamodel});
    loaders.push_back({"pm", {".pm.json"}, ResourceKind::ProcessModel, extract_pm});
    loaders.push_back({"process", {".process"}, ResourceKind::ExecutableSpec,
                       [](const fs::path& p) { return extract_exec(p, "exec"); }});
    loaders.push_back({"builtin", {".builtin"}, ResourceKind::Transformation,
                       [](const fs::path& p) { return extract_exec(p, "builtin"); }});
    loaders.push_back({"weave", {".weave.json"}, ResourceKind::WeaveModel,
                       [](const fs::path& p) { return extract_store(p, ".weave.json", "weave"); }});
    loaders.push_back({"chain", {".chain.json"}, ResourceKind::Chain,
                       [](const fs::path& p) { return extract_store(p, ".chain.json", "chain"); }});
    return loaders;
}

void check_loader_disjointness(const std::vector<LoaderSpec>& loaders) {
    for (std::size_t i = 0; i < loaders.size(); ++i) {
        for (std::size_t j = i + 1; j < loaders.size(); ++j) {
            for (const auto& a : loaders[i].extensions) {
                for (const auto& b : loaders[j].extensions) {
                    if (a.ends_with(b) || b.ends_with(a)) {
                        throw Error(ErrorCode::UsageError, "loaders \"" + loaders[i].name + "\" and \"" +
                                                               loaders[j].name + "\" overlap on " + a + " / " + b);
                    }
                }
            }
        }
    }
}

const LoaderSpec* classify(const fs::path& path, const std::vector<LoaderSpec>& loaders) {
    const LoaderSpec* hit = nullptr;
    for (const auto& l : loaders) {
        if (!l.matches(path)) continue;
        if (hit) throw Error(ErrorCode::UsageError, "ambiguous loaders for " + path.generic_string());
        hit = &l;
    }
    return hit;
}

std::optional<ResourceId> register_file(const fs::path& path, Megamodel& mgm, const std::vector<LoaderSpec>& loaders) {
    auto abs = absolute_in(mgm, path);
    if (!fs::exists(abs)) throw Error(ErrorCode::MissingFile, "no such file: " + path.generic_string());
    if (const auto* loader = classify(abs, loaders)) {
        return register_extracted(abs, mgm, loader->yields, loader->extract(abs), loader->name, nullptr);
    }
    if (auto mm = sidecar_metamodel(abs)) {
        return register_extracted(abs, mgm, ResourceKind::ModelInstance, {abs.filename().string(), *mm, {}}, "sidecar",
                                  nullptr);
    }
    return std::nullopt;
}

DiscoveryReport discover_workspace(const fs::path& root, Megamodel& mgm, const std::vector<LoaderSpec>& loaders) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(ErrorCode::IoError, "not a directory: " + root.string());
    check_loader_disjointness(loaders);
    DiscoveryReport report;

    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
        auto name = it->path().filename().string();
        if (it->is_directory() && name.starts_with(".")) {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file()) files.push_back(it->path().lexically_relative(root));
    }
    if (ec) report.warnings.push_back({Severity::Warning, "io", "walk stopped early: " + ec.message(), root.string()});
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

    std::map<std::string, std::string> manifest;
    if (fs::exists(root / kManifest)) {
        try {
            auto doc = parse_json(read_text_file(root / kManifest), ErrorCode::SyntaxError, "manifest");
            for (const auto& m : require_member(doc, "models", ErrorCode::SyntaxError, "manifest")) {
                manifest[fs::path(require_string(m, "path", ErrorCode::SyntaxError, "manifest")).lexically_normal().generic_string()] =
                    require_string(m, "metamodel", ErrorCode::SyntaxError, "manifest");
            }
        } catch (const Error& e) {
            report.warnings.push_back({Severity::Warning, "manifest", e.what(), kManifest.generic_string(), e.pos()});
        }
    }

    std::set<std::string> present;
    for (const auto& f : files) present.insert(f.generic_string());

    struct Candidate {
        int rank;
        std::string rel;
        const LoaderSpec* loader;
        std::optional<std::string> metamodel;  // model instances only
    };
    std::vector<Candidate> candidates;
    for (const auto& f : files) {
        auto rel = f.generic_string();
        if (rel.ends_with(".conforms") && present.count(rel.substr(0, rel.size() - 9))) continue;
        const LoaderSpec* loader = nullptr;
        try {
            loader = classify(f, loaders);
        } catch (const Error& e) {
            report.skipped.emplace_back(rel, e.what());
            continue;
        }
        if (loader) {
            int rank = loader->yields == ResourceKind::MetamodelDescriptor ? 0 : 2;
            candidates.push_back({rank, rel, loader, std::nullopt});
            continue;
        }
        std::optional<std::string> mm;
        if (auto m = manifest.find(rel); m != manifest.end()) {
            mm = m->second;
        } else {
            try {
                mm = sidecar_metamodel(root / f);
            } catch (const Error& e) {
                report.skipped.emplace_back(rel, e.what());
                continue;
            }
        }
        if (mm) {
            candidates.push_back({1, rel, nullptr, mm});
        } else {
            report.skipped.emplace_back(rel, "no loader for this file type");
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.rank < b.rank; });

    for (const auto& c : candidates) {
        auto abs = root / c.rel;
        auto before = mgm.resource_count();
        try {
            ResourceId id;
            if (c.loader) {
                id = register_extracted(abs, mgm, c.loader->yields, c.loader->extract(abs), c.loader->name,
                                        &report.warnings);
            } else {
                id = register_extracted(abs, mgm, ResourceKind::ModelInstance,
                                        {fs::path(c.rel).filename().string(), *c.metamodel, {}}, "sidecar",
                                        &report.warnings);
            }
            if (mgm.resource_count() > before) report.registered.push_back(id);
        } catch (const Error& e) {
            report.skipped.emplace_back(c.rel, e.what());
            report.warnings.push_back({Severity::Warning, std::string(to_string(e.code())), e.what(), c.rel, e.pos()});
        }
    }
    return report;
}

PmDiscovery discover_pm(const fs::path& pm_path, Megamodel& mgm, const fs::path& library,
                        const std::vector<LoaderSpec>& loaders) {
    auto pm = load_pm(pm_path);
    std::vector<Diagnostic> problems;
    auto entries = scan_pm_library(library, &problems);
    std::map<std::string, ProcessModel> models;
    for (const auto& [name, entry] : entries) models.emplace(name, entry.model);
    auto resolved = resolve_calls(pm, models);

    PmDiscovery result;
    result.resolved = resolved;
    result.pm = *register_file(pm_path, mgm, loaders);
    for (const auto& [name, callee] : resolved.callees) register_file(entries.at(name).path, mgm, loaders);

    std::vector<const ProcessModel*> scope_models{resolved.root.get()};
    for (const auto& [name, callee] : resolved.callees) scope_models.push_back(callee.get());
    for (const auto* model : scope_models) {
        for (const auto& n : model->nodes) {
            if (n.kind != NodeKind::Action) continue;
            auto impl = mgm.absolute_path(n.impl);
            const auto* loader = classify(impl, loaders);
            if (!loader || (loader->yields != ResourceKind::ExecutableSpec && loader->yields != ResourceKind::Transformation)) {
                throw Error(ErrorCode::UnresolvedImplementation,
                            "no loader handles implementation \"" + n.impl + "\" of action \"" + model->name + "." +
                                n.name + "\"");
            }
            if (!fs::exists(impl)) {
                throw Error(ErrorCode::UnresolvedImplementation,
                            "implementation \"" + n.impl + "\" of action \"" + model->name + "." + n.name + "\" does not exist");
            }
            register_extracted(impl, mgm, loader->yields, loader->extract(impl), loader->name, nullptr);
        }
    }

    auto flat = flatten(resolved);
    for (const auto& c : flat.carriers) {
        auto mm = mgm.metamodel_by_name(c.metamodel);
        if (!mm) {
            throw Error(ErrorCode::UnknownMetamodel, "data carrier \"" + c.id + "\" uses unknown metamodel \"" + c.metamodel + "\"");
        }
        auto draft = ResourceDraft::virtual_model(c.virtual_name, *mm);
        draft.meta["role"] = c.kind == CarrierKind::Parameter ? "parameter"
                             : c.kind == CarrierKind::ObjectNode ? "object" : "intermediate";
        mgm.register_resource(std::move(draft));
    }

    result.weave = weave(resolved, mgm);
    auto store = weave_store_path(mgm.workspace_root(), pm.name);
    save_weave(result.weave, store);
    auto weave_id = register_extracted(store, mgm, ResourceKind::WeaveModel, {pm.name, "weave", {}}, "weave", nullptr);
    mgm.add_relation({RelationKind::WeaveOf, weave_id, result.pm});
    return result;
}

}  // namespace maple
