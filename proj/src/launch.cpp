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

#include "maple/launch.hpp"

#include "maple/json_io.hpp"

namespace maple {

namespace {

constexpr auto kCode = ErrorCode::SyntaxError;

std::map<std::string, std::string> string_map(const Json& doc, const char* key) {
    std::map<std::string, std::string> out;
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return out;
    if (!it->is_object()) throw Error(kCode, std::string("launch config: \"") + key + "\" must be an object");
    for (const auto& [k, v] : it->items()) {
        if (!v.is_string()) {
            throw Error(kCode, std::string("launch config: ") + key + "." + k + " must be a string");
        }
        out[k] = v.get<std::string>();
    }
    return out;
}

}  // namespace

LaunchConfig parse_launch_config(std::string_view text, std::vector<Diagnostic>* warnings) {
    auto doc = parse_json(text, kCode, "launch config");
    if (!doc.is_object()) throw Error(kCode, "launch config: expected an object");
    LaunchConfig c;
    c.run_id = optional_string(doc, "runId", kCode, "launch config");
    c.bindings = string_map(doc, "bindings");
    c.env = string_map(doc, "env");
    if (auto it = doc.find("maxParallel"); it != doc.end()) {
        if (!it->is_number_integer()) throw Error(kCode, "launch config: maxParallel must be an integer");
        auto n = it->get<long long>();
        if (n < 1) throw Error(kCode, "launch config: maxParallel must be >= 1");
        if (n > 1024) throw Error(kCode, "launch config: maxParallel must be <= 1024");
        c.max_parallel = static_cast<int>(n);
    }
    for (const auto& [key, value] : doc.items()) {
        if (key == "runId" || key == "bindings" || key == "env" || key == "maxParallel") continue;
        if (warnings) {
            warnings->push_back({Severity::Warning, "unknown-key", "launch config: unknown key \"" + key + "\" ignored",
                                 key, position_of(text, text.find("\"" + key + "\""))});
        }
    }
    return c;
}

std::string launch_config_to_json(const LaunchConfig& config) {
    Json doc = Json::object();
    doc["runId"] = config.run_id;
    doc["bindings"] = config.bindings;
    doc["env"] = config.env;
    doc["maxParallel"] = config.max_parallel;
    return dump_json(doc);
}

}  // namespace maple
