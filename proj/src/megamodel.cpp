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

#include "maple/megamodel.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple {

namespace {

constexpr std::pair<ResourceKind, std::string_view> kResourceKindNames[] = {
    {ResourceKind::MetamodelDescriptor, "MetamodelDescriptor"},
    {ResourceKind::ModelInstance, "ModelInstance"},
    {ResourceKind::Transformation, "Transformation"},
    {ResourceKind::ExecutableSpec, "ExecutableSpec"},
    {ResourceKind::ProcessModel, "ProcessModel"},
    {ResourceKind::WeaveModel, "WeaveModel"},
    {ResourceKind::Chain, "Chain"},
};

constexpr std::pair<RelationKind, std::string_view> kRelationKindNames[] = {
    {RelationKind::ConformsTo, "ConformsTo"},
    {RelationKind::InputOf, "InputOf"},
    {RelationKind::OutputOf, "OutputOf"},
    {RelationKind::DerivedFrom, "DerivedFrom"},
    {RelationKind::WeaveOf, "WeaveOf"},
};

constexpr int kStoreVersion = 1;

std::string format_id(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "r%06llu", static_cast<unsigned long long>(n));
    return buf;
}

std::optional<std::uint64_t> numeric_suffix(const std::string& id) {
    if (id.size() < 2 || id[0] != 'r') return std::nullopt;
    std::uint64_t n = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (id[i] < '0' || id[i] > '9') return std::nullopt;
        n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
    }
    return n;
}

}  // namespace

std::string_view to_string(ResourceKind kind) {
    for (auto [k, name] : kResourceKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

std::string_view to_string(RelationKind kind) {
    for (auto [k, name] : kRelationKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

std::optional<ResourceKind> parse_resource_kind(std::string_view text) {
    for (auto [k, name] : kResourceKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view text) {
    for (auto [k, name] : kRelationKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

bool Resource::is_virtual() const {
    auto it = meta.find("virtual");
    return it != meta.end() && it->second == "true";
}

ResourceDraft ResourceDraft::virtual_model(std::string name, ResourceId metamodel) {
    ResourceDraft d;
    d.kind = ResourceKind::ModelInstance;
    d.name = std::move(name);
    d.location = std::string(kVirtualLocation);
    d.metamodel = std::move(metamodel);
    d.meta["virtual"] = "true";
    return d;
}

Megamodel::Megamodel(fs::path workspace_root) : root_(std::move(workspace_root)) {}

Megamodel::Megamodel(const Megamodel& other) {
    std::shared_lock lock(other.mutex_);
    root_ = other.root_;
    resources_ = other.resources_;
    relations_ = other.relations_;
    by_identity_ = other.by_identity_;
    next_id_ = other.next_id_;
}

Megamodel& Megamodel::operator=(const Megamodel& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    root_ = other.root_;
    resources_ = other.resources_;
    relations_ = other.relations_;
    by_identity_ = other.by_identity_;
    next_id_ = other.next_id_;
    return *this;
}

Megamodel::Megamodel(Megamodel&& other) noexcept
    : root_(std::move(other.root_)),
      resources_(std::move(other.resources_)),
      relations_(std::move(other.relations_)),
      by_identity_(std::move(other.by_identity_)),
      next_id_(other.next_id_) {}

Megamodel& Megamodel::operator=(Megamodel&& other) noexcept {
    if (this == &other) return *this;
    root_ = std::move(other.root_);
    resources_ = std::move(other.resources_);
    relations_ = std::move(other.relations_);
    by_identity_ = std::move(other.by_identity_);
    next_id_ = other.next_id_;
    return *this;
}

std::string Megamodel::identity_key(ResourceKind kind, const std::string& name, const std::string& location,
                                    bool is_virtual) const {
    std::string key(to_string(kind));
    key += is_virtual ? "|virtual|" + name : "|file|" + location;
    return key;
}

ResourceId Megamodel::fresh_id_unlocked() {
    ResourceId id{format_id(next_id_++)};
    while (resources_.count(id)) id = ResourceId{format_id(next_id_++)};
    return id;
}

void Megamodel::insert_unlocked(Resource resource) {
    auto key = identity_key(resource.kind, resource.name, resource.location, resource.is_virtual());
    by_identity_.emplace(key, resource.id);
    if (auto n = numeric_suffix(resource.id.value); n && *n >= next_id_) next_id_ = *n + 1;
    resources_.emplace(resource.id, std::move(resource));
}

std::string Megamodel::relative_location(const fs::path& path) const {
    if (path.empty()) return {};
    fs::path p = path;
    if (p.is_absolute() && !root_.empty()) {
        auto root = fs::weakly_canonical(root_);
        auto abs = fs::weakly_canonical(p);
        auto rel = abs.lexically_relative(root);
        if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
        return abs.generic_string();
    }
    return p.lexically_normal().generic_string();
}

fs::path Megamodel::absolute_path(std::string_view location) const {
    fs::path p{std::string(location)};
    if (p.is_absolute()) return p;
    return root_ / p;
}

ResourceId Megamodel::register_resource(ResourceDraft draft, std::vector<Diagnostic>* warnings) {
    const bool is_virtual = draft.meta.count("virtual") && draft.meta.at("virtual") == "true";
    if (is_virtual) {
        draft.location = std::string(kVirtualLocation);
    } else {
        draft.location = relative_location(draft.location);
        if (draft.location.empty()) {
            throw Error(ErrorCode::MissingFile, "resource \"" + draft.name + "\" has no location");
        }
        if (!fs::exists(absolute_path(draft.location))) {
            throw Error(ErrorCode::MissingFile, "no such file: " + draft.location);
        }
    }

    std::unique_lock lock(mutex_);
    auto key = identity_key(draft.kind, draft.name, draft.location, is_virtual);
    if (auto it = by_identity_.find(key); it != by_identity_.end()) return it->second;

    if (draft.kind == ResourceKind::ModelInstance && !draft.metamodel) {
        throw Error(ErrorCode::UnknownMetamodel, "model instance \"" + draft.name + "\" declares no metamodel");
    }
    if (draft.metamodel) {
        auto mm = resources_.find(*draft.metamodel);
        if (mm == resources_.end() || mm->second.kind != ResourceKind::MetamodelDescriptor) {
            throw Error(ErrorCode::UnknownMetamodel,
                        "unknown metamodel \"" + draft.metamodel->value + "\" for \"" + draft.name + "\"");
        }
    }
    if (warnings) {
        for (const auto& [id, r] : resources_) {
            if (r.kind == draft.kind && r.name == draft.name) {
                warnings->push_back({Severity::Warning, "duplicate-name",
                                     "another " + std::string(to_string(draft.kind)) + " is named \"" +
                                         draft.name + "\" (" + id.value + ")",
                                     draft.name});
                break;
            }
        }
    }

    Resource r;
    r.id = fresh_id_unlocked();
    r.kind = draft.kind;
    r.name = std::move(draft.name);
    r.location = std::move(draft.location);
    r.metamodel = draft.metamodel;
    r.meta = std::move(draft.meta);
    auto id = r.id;
    insert_unlocked(std::move(r));
    if (draft.metamodel) relations_.insert({RelationKind::ConformsTo, id, *draft.metamodel});
    return id;
}

void Megamodel::add_relation_unlocked(const Relation& rel) {
    auto src = resources_.find(rel.source);
    auto dst = resources_.find(rel.target);
    if (src == resources_.end() || dst == resources_.end()) {
        throw Error(ErrorCode::DanglingEndpoint, std::string(to_string(rel.kind)) + " " + rel.source.value +
                                                     " -> " + rel.target.value + " has an unresolved endpoint");
    }
    auto bad = [&](std::string_view expect) {
        throw Error(ErrorCode::BadTargetKind, std::string(to_string(rel.kind)) + " " + rel.source.value + " -> " +
                                                  rel.target.value + ": " + std::string(expect));
    };
    switch (rel.kind) {
        case RelationKind::ConformsTo: {
            if (dst->second.kind != ResourceKind::MetamodelDescriptor) bad("target must be a MetamodelDescriptor");
            if (relations_.count(rel)) return;
            auto& source = src->second;
            if (source.metamodel && *source.metamodel != rel.target) {
                throw Error(ErrorCode::ConformanceConflict,
                            source.id.value + " already conforms to " + source.metamodel->value);
            }
            source.metamodel = rel.target;
            break;
        }
        case RelationKind::WeaveOf:
            if (src->second.kind != ResourceKind::WeaveModel) bad("source must be a WeaveModel");
            if (dst->second.kind != ResourceKind::ProcessModel) bad("target must be a ProcessModel");
            break;
        case RelationKind::InputOf:
        case RelationKind::OutputOf:
            if (dst->second.kind != ResourceKind::Transformation && dst->second.kind != ResourceKind::ExecutableSpec) {
                bad("target must be a Transformation or ExecutableSpec");
            }
            break;
        case RelationKind::DerivedFrom:
            break;
    }
    relations_.insert(rel);
}

void Megamodel::add_relation(const Relation& relation) {
    std::unique_lock lock(mutex_);
    add_relation_unlocked(relation);
}

std::vector<ResourceId> Megamodel::find(const ResourceQuery& q) const {
    std::shared_lock lock(mutex_);
    std::vector<const Resource*> hits;
    for (const auto& [id, r] : resources_) {
        if (q.kind && r.kind != *q.kind) continue;
        if (q.name && r.name != *q.name) continue;
        if (q.metamodel) {
            if (!r.metamodel) continue;
            bool match = r.metamodel->value == *q.metamodel;
            if (!match) {
                auto mm = resources_.find(*r.metamodel);
                match = mm != resources_.end() && mm->second.name == *q.metamodel;
            }
            if (!match) continue;
        }
        if (q.related_to) {
            bool related = std::any_of(relations_.begin(), relations_.end(), [&](const Relation& rel) {
                return (rel.source == id && rel.target == *q.related_to) ||
                       (rel.target == id && rel.source == *q.related_to);
            });
            if (!related) continue;
        }
        hits.push_back(&r);
    }
    std::sort(hits.begin(), hits.end(), [](const Resource* a, const Resource* b) {
        if (a->name != b->name) return a->name < b->name;
        return a->id < b->id;
    });
    std::vector<ResourceId> out;
    out.reserve(hits.size());
    for (const auto* r : hits) out.push_back(r->id);
    return out;
}

ResourceId Megamodel::record_artifact(const fs::path& path, const ResourceId& metamodel,
                                      std::string_view producer_step, std::string_view display_name) {
    auto location = relative_location(path);
    if (location.empty() || !fs::exists(absolute_path(location))) {
        throw Error(ErrorCode::MissingFile, "artifact does not exist: " + path.string());
    }
    {
        std::shared_lock lock(mutex_);
        auto mm = resources_.find(metamodel);
        if (mm == resources_.end() || mm->second.kind != ResourceKind::MetamodelDescriptor) {
            throw Error(ErrorCode::UnknownMetamodel, "unknown metamodel \"" + metamodel.value + "\"");
        }
    }
    ResourceDraft d;
    d.kind = ResourceKind::ModelInstance;
    d.name = display_name.empty() ? fs::path(location).filename().string() : std::string(display_name);
    d.location = location;
    d.metamodel = metamodel;
    d.meta["producer"] = std::string(producer_step);
    return register_resource(std::move(d));
}

std::optional<Resource> Megamodel::get(const ResourceId& id) const {
    std::shared_lock lock(mutex_);
    auto it = resources_.find(id);
    if (it == resources_.end()) return std::nullopt;
    return it->second;
}

Resource Megamodel::at(const ResourceId& id) const {
    auto r = get(id);
    if (!r) throw Error(ErrorCode::DanglingEndpoint, "no resource with id " + id.value);
    return *r;
}

bool Megamodel::contains(const ResourceId& id) const {
    std::shared_lock lock(mutex_);
    return resources_.count(id) > 0;
}

std::optional<ResourceId> Megamodel::metamodel_by_name(std::string_view name) const {
    auto hits = find({ResourceKind::MetamodelDescriptor, std::string(name), std::nullopt, std::nullopt});
    if (hits.empty()) return std::nullopt;
    return hits.front();
}

std::optional<ResourceId> Megamodel::find_by_location(ResourceKind kind, std::string_view location) const {
    auto key = identity_key(kind, {}, relative_location(fs::path(std::string(location))), false);
    std::shared_lock lock(mutex_);
    auto it = by_identity_.find(key);
    if (it == by_identity_.end()) return std::nullopt;
    return it->second;
}

std::vector<Resource> Megamodel::resources() const {
    std::shared_lock lock(mutex_);
    std::vector<Resource> out;
    out.reserve(resources_.size());
    for (const auto& [id, r] : resources_) out.push_back(r);
    return out;
}

std::vector<Relation> Megamodel::relations() const {
    std::shared_lock lock(mutex_);
    return {relations_.begin(), relations_.end()};
}

std::size_t Megamodel::resource_count() const {
    std::shared_lock lock(mutex_);
    return resources_.size();
}

std::size_t Megamodel::relation_count() const {
    std::shared_lock lock(mutex_);
    return relations_.size();
}

bool operator==(const Megamodel& a, const Megamodel& b) {
    if (&a == &b) return true;
    std::shared_lock la(a.mutex_, std::defer_lock);
    std::shared_lock lb(b.mutex_, std::defer_lock);
    std::lock(la, lb);
    return a.resources_ == b.resources_ && a.relations_ == b.relations_;
}

Megamodel base_megamodel(const fs::path& workspace_root) {
    Megamodel mgm(workspace_root);
    std::vector<ResourceId> ids;
    for (auto name : kBuiltinMetamodels) {
        Resource r;
        r.id = mgm.fresh_id_unlocked();
        r.kind = ResourceKind::MetamodelDescriptor;
        r.name = std::string(name);
        r.location = std::string(kVirtualLocation);
        r.meta = {{"builtin", "true"}, {"virtual", "true"}};
        ids.push_back(r.id);
        mgm.insert_unlocked(std::move(r));
    }
    const auto& core = ids.front();
    for (const auto& id : ids) {
        mgm.resources_.at(id).metamodel = core;
        mgm.relations_.insert({RelationKind::ConformsTo, id, core});
    }
    return mgm;
}

fs::path megamodel_store_path(const fs::path& workspace_root) {
    return workspace_root / ".maple" / "megamodel.json";
}

std::string megamodel_to_json(const Megamodel& mgm) {
    Json doc = Json::object();
    doc["version"] = kStoreVersion;
    Json resources = Json::array();
    for (const auto& r : mgm.resources()) {
        Json j = Json::object();
        j["id"] = r.id.value;
        j["kind"] = to_string(r.kind);
        j["name"] = r.name;
        j["location"] = r.location;
        j["metamodel"] = r.metamodel ? Json(r.metamodel->value) : Json(nullptr);
        Json meta = Json::object();
        for (const auto& [k, v] : r.meta) meta[k] = v;
        j["meta"] = std::move(meta);
        resources.push_back(std::move(j));
    }
    doc["resources"] = std::move(resources);
    Json relations = Json::array();
    auto rels = mgm.relations();
    std::sort(rels.begin(), rels.end(), [](const Relation& a, const Relation& b) {
        return std::tie(a.source, a.kind, a.target) < std::tie(b.source, b.kind, b.target);
    });
    for (const auto& rel : rels) {
        relations.push_back(Json{{"kind", to_string(rel.kind)}, {"source", rel.source.value}, {"target", rel.target.value}});
    }
    doc["relations"] = std::move(relations);
    return dump_json(doc);
}

Megamodel megamodel_from_json(std::string_view text, const fs::path& workspace_root) {
    constexpr auto kCode = ErrorCode::MalformedStore;
    auto doc = parse_json(text, kCode, "megamodel store");
    const auto& version = require_member(doc, "version", kCode, "megamodel store");
    if (!version.is_number_integer() || version.get<int>() < 1 || version.get<int>() > kStoreVersion) {
        throw Error(kCode, "megamodel store: unsupported version " + version.dump());
    }
    const auto& resources = require_member(doc, "resources", kCode, "megamodel store");
    const auto& relations = require_member(doc, "relations", kCode, "megamodel store");
    if (!resources.is_array() || !relations.is_array()) {
        throw Error(kCode, "megamodel store: resources and relations must be arrays");
    }

    Megamodel mgm(workspace_root);
    for (std::size_t i = 0; i < resources.size(); ++i) {
        const auto& j = resources[i];
        auto ctx = "megamodel store: resources[" + std::to_string(i) + "]";
        Resource r;
        r.id = ResourceId{require_string(j, "id", kCode, ctx)};
        auto kind = parse_resource_kind(require_string(j, "kind", kCode, ctx));
        if (!kind) throw Error(kCode, ctx + ": unknown kind");
        r.kind = *kind;
        r.name = require_string(j, "name", kCode, ctx);
        r.location = require_string(j, "location", kCode, ctx);
        if (auto mm = optional_string(j, "metamodel", kCode, ctx); !mm.empty()) r.metamodel = ResourceId{mm};
        if (auto it = j.find("meta"); it != j.end()) {
            if (!it->is_object()) throw Error(kCode, ctx + ": meta must be an object");
            for (const auto& [k, v] : it->items()) {
                if (!v.is_string()) throw Error(kCode, ctx + ": meta values must be strings");
                r.meta[k] = v.get<std::string>();
            }
        }
        if (r.id.empty()) throw Error(kCode, ctx + ": empty id");
        if (mgm.resources_.count(r.id)) throw Error(kCode, ctx + ": duplicate id " + r.id.value);
        mgm.insert_unlocked(std::move(r));
    }
    for (const auto& [id, r] : mgm.resources_) {
        if (r.metamodel && !mgm.resources_.count(*r.metamodel)) {
            throw Error(kCode, "megamodel store: " + id.value + " references unknown metamodel " + r.metamodel->value);
        }
    }
    for (std::size_t i = 0; i < relations.size(); ++i) {
        const auto& j = relations[i];
        auto ctx = "megamodel store: relations[" + std::to_string(i) + "]";
        auto kind = parse_relation_kind(require_string(j, "kind", kCode, ctx));
        if (!kind) throw Error(kCode, ctx + ": unknown kind");
        Relation rel{*kind, ResourceId{require_string(j, "source", kCode, ctx)},
                     ResourceId{require_string(j, "target", kCode, ctx)}};
        try {
            mgm.add_relation_unlocked(rel);
        } catch (const Error& e) {
            throw Error(kCode, ctx + ": " + e.what());
        }
    }
    return mgm;
}

void save_megamodel(const Megamodel& mgm, const fs::path& path) { write_text_file(path, megamodel_to_json(mgm)); }

Megamodel load_megamodel(const fs::path& path, std::optional<fs::path> workspace_root) {
    auto root = workspace_root ? *workspace_root : path.parent_path().parent_path();
    return megamodel_from_json(read_text_file(path), root);
}

namespace {

std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

std::string_view dot_shape(ResourceKind kind) {
    switch (kind) {
        case ResourceKind::MetamodelDescriptor: return "shape=box,style=filled,fillcolor=orange";
        case ResourceKind::ModelInstance: return "shape=note";
        case ResourceKind::Transformation: return "shape=component,style=filled,fillcolor=burlywood";
        case ResourceKind::ExecutableSpec: return "shape=component,style=filled,fillcolor=burlywood";
        case ResourceKind::ProcessModel: return "shape=box,style=filled,fillcolor=lightgray";
        case ResourceKind::WeaveModel: return "shape=box,style=filled,fillcolor=lightgray";
        case ResourceKind::Chain: return "shape=box,style=filled,fillcolor=lightgray";
    }
    return "shape=box";
}

}  // namespace

std::string megamodel_to_dot(const Megamodel& mgm) {
    std::ostringstream out;
    out << "digraph megamodel {\n";
    for (const auto& r : mgm.resources()) {
        out << "  \"" << r.id.value << "\" [label=\"" << dot_escape(r.name) << "\\n" << to_string(r.kind) << "\","
            << dot_shape(r.kind) << "];\n";
    }
    for (const auto& rel : mgm.relations()) {
        out << "  \"" << rel.source.value << "\" -> \"" << rel.target.value << "\" [label=\"" << to_string(rel.kind)
            << "\"" << (rel.kind == RelationKind::ConformsTo ? ",style=dashed" : "") << "];\n";
    }
    out << "}\n";
    return out.str();
}

std::string megamodel_to_table(const Megamodel& mgm) {
    std::ostringstream out;
    auto resources = mgm.resources();
    std::map<ResourceId, std::string> names;
    for (const auto& r : resources) names[r.id] = r.name;
    out << "ID       KIND                 NAME                                     METAMODEL   LOCATION\n";
    for (const auto& r : resources) {
        auto pad = [](std::string s, std::size_t w) {
            if (s.size() < w) s.append(w - s.size(), ' ');
            return s;
        };
        out << pad(r.id.value, 9) << pad(std::string(to_string(r.kind)), 21) << pad(r.name, 41)
            << pad(r.metamodel ? names[*r.metamodel] : "-", 12) << r.location << "\n";
    }
    out << resources.size() << " resources, " << mgm.relation_count() << " relations\n";
    return out.str();
}

}  // namespace maple
