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

#include "maple/json_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace fs = std::filesystem;

namespace maple {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    return buf.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

Json parse_json(std::string_view text, ErrorCode code, std::string_view what) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        auto pos = position_of(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = std::string(what) + ": malformed JSON at line " + std::to_string(pos.line) +
                          ", column " + std::to_string(pos.column) + " (offset " + std::to_string(e.byte) + ")";
        throw Error(code, msg, pos);
    }
}

const Json& require_member(const Json& object, std::string_view key, ErrorCode code, std::string_view context) {
    if (!object.is_object()) throw Error(code, std::string(context) + ": expected an object");
    auto it = object.find(key);
    if (it == object.end()) {
        throw Error(code, std::string(context) + ": missing key \"" + std::string(key) + "\"");
    }
    return *it;
}

std::string require_string(const Json& object, std::string_view key, ErrorCode code, std::string_view context) {
    const auto& v = require_member(object, key, code, context);
    if (!v.is_string()) {
        throw Error(code, std::string(context) + ": \"" + std::string(key) + "\" must be a string");
    }
    return v.get<std::string>();
}

std::string optional_string(const Json& object, std::string_view key, ErrorCode code, std::string_view context) {
    if (!object.is_object()) throw Error(code, std::string(context) + ": expected an object");
    auto it = object.find(key);
    if (it == object.end() || it->is_null()) return {};
    if (!it->is_string()) {
        throw Error(code, std::string(context) + ": \"" + std::string(key) + "\" must be a string");
    }
    return it->get<std::string>();
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

}  // namespace maple
