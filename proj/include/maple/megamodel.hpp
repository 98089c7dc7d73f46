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

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "maple/error.hpp"

namespace maple {

/// Opaque identifier of a megamodel resource; stable across save/load.
struct ResourceId {
    std::string value;

    bool empty() const noexcept { return value.empty(); }
    friend auto operator<=>(const ResourceId&, const ResourceId&) = default;
    friend bool operator==(const ResourceId&, const ResourceId&) = default;
};

enum class ResourceKind {
    MetamodelDescriptor,
    ModelInstance,
    Transformation,
    ExecutableSpec,
    ProcessModel,
    WeaveModel,
    Chain,
};

enum class RelationKind { ConformsTo, InputOf, OutputOf, DerivedFrom, WeaveOf };

std::string_view to_string(ResourceKind kind);
std::string_view to_string(RelationKind kind);
std::optional<ResourceKind> parse_resource_kind(std::string_view text);
std::optional<RelationKind> parse_relation_kind(std::string_view text);

/// Location value used by resources with no backing file.
inline constexpr std::string_view kVirtualLocation = "virtual";

struct Resource {
    ResourceId id;
    ResourceKind kind = ResourceKind::ModelInstance;
    std::string name;
    std::string location;  // workspace-relative, generic separators, or "virtual"
    std::optional<ResourceId> metamodel;
    std::map<std::string, std::string> meta;

    bool is_virtual() const;
    friend bool operator==(const Resource&, const Resource&) = default;
};

/// A resource as handed to `register_resource`, before an id is assigned.
struct ResourceDraft {
    ResourceKind kind = ResourceKind::ModelInstance;
    std::string name;
    std::string location;
    std::optional<ResourceId> metamodel;
    std::map<std::string, std::string> meta;

    static ResourceDraft virtual_model(std::string name, ResourceId metamodel);
};

struct Relation {
    RelationKind kind = RelationKind::ConformsTo;
    ResourceId source;
    ResourceId target;

    friend auto operator<=>(const Relation&, const Relation&) = default;
    friend bool operator==(const Relation&, const Relation&) = default;
};

struct ResourceQuery {
    std::optional<ResourceKind> kind;
    std::optional<std::string> name;
    /// Matches either the metamodel's id or the descriptor's name.
    std::optional<std::string> metamodel;
    std::optional<ResourceId> related_to;
};

/// The model registry. Reads take a shared lock and mutations an exclusive
/// one, so a single instance may be updated from concurrently running steps.
class Megamodel {
public:
    explicit Megamodel(std::filesystem::path workspace_root = {});
    Megamodel(const Megamodel& other);
    Megamodel& operator=(const Megamodel& other);
    Megamodel(Megamodel&& other) noexcept;
    Megamodel& operator=(Megamodel&& other) noexcept;
    ~Megamodel() = default;

    const std::filesystem::path& workspace_root() const noexcept { return root_; }

    /// Stores `draft` under a fresh id, or returns the id already registered
    /// for the same (kind, location). Virtual resources key on their name.
    ResourceId register_resource(ResourceDraft draft, std::vector<Diagnostic>* warnings = nullptr);

    /// Set semantics: re-adding an existing relation is a no-op.
    void add_relation(const Relation& relation);

    std::vector<ResourceId> find(const ResourceQuery& query) const;

    /// Registers a file produced during enactment as a ModelInstance.
    ResourceId record_artifact(const std::filesystem::path& path, const ResourceId& metamodel,
                               std::string_view producer_step, std::string_view display_name = {});

    std::optional<Resource> get(const ResourceId& id) const;
    Resource at(const ResourceId& id) const;
    bool contains(const ResourceId& id) const;
    std::optional<ResourceId> metamodel_by_name(std::string_view name) const;
    std::optional<ResourceId> find_by_location(ResourceKind kind, std::string_view location) const;

    std::vector<Resource> resources() const;
    std::vector<Relation> relations() const;
    std::size_t resource_count() const;
    std::size_t relation_count() const;

    /// Workspace-relative generic form of `path` (absolute paths inside the
    /// workspace are relativized, others kept absolute).
    std::string relative_location(const std::filesystem::path& path) const;
    std::filesystem::path absolute_path(std::string_view location) const;

    /// Structural equality: resources and relations, not the workspace root.
    friend bool operator==(const Megamodel& a, const Megamodel& b);

private:
    friend Megamodel megamodel_from_json(std::string_view, const std::filesystem::path&);
    friend Megamodel base_megamodel(const std::filesystem::path&);

    void insert_unlocked(Resource resource);
    void add_relation_unlocked(const Relation& relation);
    ResourceId fresh_id_unlocked();
    std::string identity_key(ResourceKind kind, const std::string& name, const std::string& location,
                             bool is_virtual) const;

    std::filesystem::path root_;
    mutable std::shared_mutex mutex_;
    std::map<ResourceId, Resource> resources_;
    std::set<Relation> relations_;
    std::map<std::string, ResourceId> by_identity_;
    std::uint64_t next_id_ = 1;
};

/// Names of the built-in metamodel descriptors, in id order.
inline constexpr std::string_view kBuiltinMetamodels[] = {"core", "pm", "weave", "chain", "process"};

Megamodel base_megamodel(const std::filesystem::path& workspace_root);

std::filesystem::path megamodel_store_path(const std::filesystem::path& workspace_root);

void save_megamodel(const Megamodel& mgm, const std::filesystem::path& path);

/// Loads a store file. When `workspace_root` is omitted it is inferred from
/// the conventional `<workspace>/.maple/megamodel.json` layout.
Megamodel load_megamodel(const std::filesystem::path& path,
                         std::optional<std::filesystem::path> workspace_root = std::nullopt);

std::string megamodel_to_json(const Megamodel& mgm);
Megamodel megamodel_from_json(std::string_view text, const std::filesystem::path& workspace_root);

std::string megamodel_to_dot(const Megamodel& mgm);
std::string megamodel_to_table(const Megamodel& mgm);

}  // namespace maple
