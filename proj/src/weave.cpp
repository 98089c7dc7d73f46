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

#include "maple/weave.hpp"

#include <algorithm>

#include "maple/flatten.hpp"
#include "maple/json_io.hpp"

namespace fs = std::filesystem;

namespace maple {

namespace {

constexpr int kWeaveVersion = 1;

constexpr std::pair<MappingKind, std::string_view> kMappingNames[] = {
    {MappingKind::ActionMapping, "ActionMapping"},
    {MappingKind::ObjectNodeMapping, "ObjectNodeMapping"},
    {MappingKind::InOutMapping, "InOutMapping"},
};

std::optional<ResourceId> implementation_of(const Megamodel& mgm, const std::string& impl) {
    if (auto id = mgm.find_by_location(ResourceKind::ExecutableSpec, impl)) return id;
    return mgm.find_by_location(ResourceKind::Transformation, impl);
}

std::optional<ResourceId> virtual_model(const Megamodel& mgm, const std::string& name) {
    for (const auto& id : mgm.find({ResourceKind::ModelInstance, name, std::nullopt, std::nullopt})) {
        if (mgm.at(id).is_virtual()) return id;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(MappingKind kind) {
    for (auto [k, name] : kMappingNames) {
        if (k == kind) return name;
    }
    return "?";
}

std::optional<ResourceId> WeaveModel::action_impl(std::string_view action) const {
    for (const auto& m : mappings) {
        if (m.kind == MappingKind::ActionMapping && m.pm_element == action) return m.mgm_resource;
    }
    return std::nullopt;
}

std::optional<ResourceId> WeaveModel::carrier_resource(std::string_view carrier) const {
    for (const auto& m : mappings) {
        if (m.kind == MappingKind::ObjectNodeMapping && m.pm_element == carrier) return m.mgm_resource;
    }
    return std::nullopt;
}

std::size_t WeaveModel::count(MappingKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(mappings.begin(), mappings.end(), [&](const Mapping& m) { return m.kind == kind; }));
}

WeaveModel ActivityWeaver::weave(const ResolvedProcessModel& pm, const Megamodel& mgm) const {
    const auto& root = *pm.root;
    WeaveModel w;
    auto pm_ids = mgm.find({ResourceKind::ProcessModel, root.name, std::nullopt, std::nullopt});
    if (pm_ids.empty()) {
        throw Error(ErrorCode::UnresolvedImplementation, "process model \"" + root.name + "\" is not registered");
    }
    w.pm = pm_ids.front();

    auto flat = flatten(pm);
    std::vector<std::optional<ResourceId>> carrier_ids(flat.carriers.size());
    for (std::size_t c = 0; c < flat.carriers.size(); ++c) {
        const auto& carrier = flat.carriers[c];
        auto id = virtual_model(mgm, carrier.virtual_name);
        if (!id) {
            throw Error(ErrorCode::UnmappedObjectFlow, "no megamodel resource \"" + carrier.virtual_name +
                                                           "\" backs data carrier \"" + carrier.id + "\"");
        }
        carrier_ids[c] = id;
    }
    for (const auto& node : flat.nodes) {
        if (node.kind != FlatNodeKind::Action) continue;
        auto impl = implementation_of(mgm, node.impl);
        if (!impl) {
            throw Error(ErrorCode::UnresolvedImplementation,
                        "implementation \"" + node.impl + "\" of action \"" + node.id + "\" is not registered");
        }
        w.mappings.push_back({MappingKind::ActionMapping, node.id, *impl, std::nullopt});
    }
    for (std::size_t c = 0; c < flat.carriers.size(); ++c) {
        w.mappings.push_back({MappingKind::ObjectNodeMapping, flat.carriers[c].id, *carrier_ids[c], std::nullopt});
    }
    for (const auto& b : flat.bindings) {
        PinRef pin{flat.nodes[b.node].id + "." + b.pin, b.direction};
        w.mappings.push_back({MappingKind::InOutMapping, flat.carriers[b.carrier].id, *carrier_ids[b.carrier], pin});
    }
    return w;
}

WeaveModel weave(const ResolvedProcessModel& pm, const Megamodel& mgm) { return ActivityWeaver{}.weave(pm, mgm); }

fs::path weave_store_path(const fs::path& workspace_root, std::string_view pm_name) {
    return workspace_root / ".maple" / "weave" / (std::string(pm_name) + ".weave.json");
}

std::string weave_to_json(const WeaveModel& w) {
    Json doc = Json::object();
    doc["version"] = kWeaveVersion;
    doc["pm"] = w.pm.value;
    Json mappings = Json::array();
    for (const auto& m : w.mappings) {
        Json j = Json::object();
        j["kind"] = to_string(m.kind);
        j["pmElement"] = m.pm_element;
        j["mgmResource"] = m.mgm_resource.value;
        if (m.pin) j["pin"] = Json{{"ref", m.pin->ref}, {"direction", to_string(m.pin->direction)}};
        mappings.push_back(std::move(j));
    }
    doc["mappings"] = std::move(mappings);
    return dump_json(doc);
}

WeaveModel weave_from_json(std::string_view text) {
    constexpr auto kCode = ErrorCode::MalformedStore;
    auto doc = parse_json(text, kCode, "weave store");
    const auto& version = require_member(doc, "version", kCode, "weave store");
    if (!version.is_number_integer() || version.get<int>() != kWeaveVersion) {
        throw Error(kCode, "weave store: unsupported version " + version.dump());
    }
    WeaveModel w;
    w.pm = ResourceId{require_string(doc, "pm", kCode, "weave store")};
    const auto& mappings = require_member(doc, "mappings", kCode, "weave store");
    if (!mappings.is_array()) throw Error(kCode, "weave store: mappings must be an array");
    for (std::size_t i = 0; i < mappings.size(); ++i) {
        const auto& j = mappings[i];
        auto ctx = "weave store: mappings[" + std::to_string(i) + "]";
        Mapping m;
        auto kind = require_string(j, "kind", kCode, ctx);
        auto it = std::find_if(std::begin(kMappingNames), std::end(kMappingNames),
                               [&](const auto& entry) { return entry.second == kind; });
        if (it == std::end(kMappingNames)) throw Error(kCode, ctx + ": unknown kind \"" + kind + "\"");
        m.kind = it->first;
        m.pm_element = require_string(j, "pmElement", kCode, ctx);
        m.mgm_resource = ResourceId{require_string(j, "mgmResource", kCode, ctx)};
        if (auto p = j.find("pin"); p != j.end() && !p->is_null()) {
            auto dir = parse_direction(require_string(*p, "direction", kCode, ctx + ".pin"));
            if (!dir) throw Error(kCode, ctx + ".pin: bad direction");
            m.pin = PinRef{require_string(*p, "ref", kCode, ctx + ".pin"), *dir};
        }
        if ((m.kind == MappingKind::InOutMapping) != m.pin.has_value()) {
            throw Error(kCode, ctx + ": only InOutMapping entries carry a pin");
        }
        w.mappings.push_back(std::move(m));
    }
    return w;
}

void save_weave(const WeaveModel& w, const fs::path& path) { write_text_file(path, weave_to_json(w)); }

WeaveModel load_weave(const fs::path& path) { return weave_from_json(read_text_file(path)); }

}  // namespace maple
