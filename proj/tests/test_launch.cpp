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

#include "doctest.h"
#include "maple/launch.hpp"

using namespace maple;

TEST_CASE("launch config parsing") {
    std::vector<Diagnostic> warnings;
    auto c = parse_launch_config(R"({
  "runId": "r1",
  "bindings": {"NSReq": "in/nsreq1.model"},
  "env": {"A": "1"},
  "maxParallel": 2,
  "colour": "blue"
})",
                                 &warnings);
    CHECK(c.run_id == "r1");
    CHECK(c.bindings.at("NSReq") == "in/nsreq1.model");
    CHECK(c.env.at("A") == "1");
    CHECK(c.max_parallel == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].code == "unknown-key");
    CHECK(parse_launch_config(launch_config_to_json(c)) == c);
}

TEST_CASE("defaults and rejects") {
    auto c = parse_launch_config("{}");
    CHECK(c.run_id.empty());
    CHECK(c.max_parallel == 4);
    for (const char* bad : {R"({"maxParallel": 0})", R"({"bindings": []})", R"({"bindings": {"a": 1}})", "[]", "{"}) {
        try {
            parse_launch_config(bad);
            FAIL("accepted: " << bad);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SyntaxError);
        }
    }
}
