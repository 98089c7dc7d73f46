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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maple/megamodel.hpp"
#include "maple/procmodel.hpp"

namespace maple {

enum class MappingKind { ActionMapping, ObjectNodeMapping, InOutMapping };

std::string_view to_string(MappingKind kind);

struct PinRef {
    std::string ref;  // "<qualified action>.<pin>"
    Direction direction = Direction::In;

    friend bool operator==(const PinRef&, const PinRef&) = default;
};

/// Links one element of the (flattened) process model to a megamodel resource.
struct Mapping {
    MappingKind kind = MappingKind::ActionMapping;
    std::string pm_element;
    ResourceId mgm_resource;
    std::optional<PinRef> pin;  // InOutMapping only

    friend bool operator==(const Mapping&, const Mapping&) = default;
};

struct WeaveModel {
    ResourceId pm;
    std::vector<Mapping> mappings;

    std::optional<ResourceId> action_impl(std::string_view action) const;
    std::optional<ResourceId> carrier_resource(std::string_view carrier) const;
    std::size_t count(MappingKind kind) const;

    friend bool operator==(const WeaveModel&, const WeaveModel&) = default;
};

/// A weaver binds one process-model language to the megamodel.
class Weaver {
public:
    virtual ~Weaver() = default;
    virtual WeaveModel weave(const ResolvedProcessModel& pm, const Megamodel& mgm) const = 0;
};

/// Weaver for the activity-diagram process models of this project.
class ActivityWeaver final : public Weaver {
public:
    WeaveModel weave(const ResolvedProcessModel& pm, const Megamodel& mgm) const override;
};

WeaveModel weave(const ResolvedProcessModel& pm, const Megamodel& mgm);

std::filesystem::path weave_store_path(const std::filesystem::path& workspace_root, std::string_view pm_name);

std::string weave_to_json(const WeaveModel& w);
WeaveModel weave_from_json(std::string_view text);
void save_weave(const WeaveModel& w, const std::filesystem::path& path);
WeaveModel load_weave(const std::filesystem::path& path);

}  // namespace maple
