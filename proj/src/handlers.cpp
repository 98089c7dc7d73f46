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

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "maple/discovery.hpp"
#include "maple/enactor.hpp"
#include "maple/json_io.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace maple {

void HandlerRegistry::add(Handler handler) {
    auto kind = handler.kind;
    handlers_.insert_or_assign(std::move(kind), std::move(handler));
}

const Handler* HandlerRegistry::find(std::string_view kind) const {
    auto it = handlers_.find(kind);
    return it == handlers_.end() ? nullptr : &it->second;
}

std::vector<std::string> HandlerRegistry::kinds() const {
    std::vector<std::string> out;
    for (const auto& [kind, h] : handlers_) out.push_back(kind);
    return out;
}

namespace {

void expect_arity(std::string_view op, std::size_t ins, std::size_t min_in, std::size_t max_in, std::size_t outs,
                  std::size_t want_out) {
    if (ins < min_in || ins > max_in || outs != want_out) {
        std::string in_desc = min_in == max_in ? std::to_string(min_in) : "at least " + std::to_string(min_in);
        throw Error(ErrorCode::ArityMismatch, std::string(op) + " takes " + in_desc + " input(s) and " +
                                                  std::to_string(want_out) + " output(s), got " + std::to_string(ins) +
                                                  " and " + std::to_string(outs));
    }
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

void append_log(const fs::path& log, std::string_view text) {
    if (log.empty() || text.empty()) return;
    std::string line(text);
    if (line.back() != '\n') line += '\n';
    std::error_code ec;
    fs::create_directories(log.parent_path(), ec);
    if (FILE* f = std::fopen(log.c_str(), "ab")) {
        std::fwrite(line.data(), 1, line.size(), f);
        std::fclose(f);
    }
}

/// Splits on blanks. Single quotes are literal; double quotes allow backslash escapes.
std::vector<std::string> tokenize(std::string_view command) {
    std::vector<std::string> out;
    std::string cur;
    bool in_token = false;
    char quote = 0;  // '"' or '\'' while inside quotes
    for (std::size_t i = 0; i < command.size(); ++i) {
        char c = command[i];
        if (quote == '\'') {
            if (c == '\'') {
                quote = 0;
            } else {
                cur += c;
            }
        } else if (quote == '"') {
            if (c == '\\' && i + 1 < command.size()) {
                cur += command[++i];
            } else if (c == '"') {
                quote = 0;
            } else {
                cur += c;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
            in_token = true;
        } else if (c == ' ' || c == '\t' || c == '\n') {
            if (in_token) out.push_back(std::move(cur));
            cur.clear();
            in_token = false;
        } else {
            cur += c;
            in_token = true;
        }
    }
    if (quote) throw Error(ErrorCode::SpawnFailure, "unterminated quote in command: " + std::string(command));
    if (in_token) out.push_back(std::move(cur));
    return out;
}

std::string substitute(const std::string& token, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t at = 0;
    while (at < token.size()) {
        auto open = token.find('{', at);
        auto close = open == std::string::npos ? std::string::npos : token.find('}', open);
        if (close == std::string::npos) {
            out += token.substr(at);
            break;
        }
        auto name = token.substr(open + 1, close - open - 1);
        auto it = values.find(name);
        if (it == values.end()) throw Error(ErrorCode::UnboundPlaceholder, "no value for placeholder {" + name + "}");
        out += token.substr(at, open - at);
        out += it->second;
        at = close + 1;
    }
    return out;
}

fs::path self_directory() {
    std::error_code ec;
    auto exe = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::path{} : exe.parent_path();
}

std::optional<fs::path> resolve_program(const std::string& program, const std::string& path_var, const fs::path& cwd) {
    auto runnable = [](const fs::path& p) {
        std::error_code ec;
        return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
    };
    if (program.find('/') != std::string::npos) {
        fs::path p(program);
        if (p.is_relative()) p = cwd / p;
        return runnable(p) ? std::optional<fs::path>(p) : std::nullopt;
    }
    std::size_t start = 0;
    while (start <= path_var.size()) {
        auto end = path_var.find(':', start);
        if (end == std::string::npos) end = path_var.size();
        fs::path dir = path_var.substr(start, end - start);
        if (dir.empty()) dir = cwd;
        if (runnable(dir / program)) return dir / program;
        start = end + 1;
    }
    return std::nullopt;
}

HandlerResult run_exec(const StepInvocation& inv, const std::vector<fs::path>& tool_dirs) {
    auto spec = load_exec_spec(inv.impl_path);
    std::map<std::string, std::string> values;
    for (const auto& p : spec.parameters) {
        const auto& side = p.direction == Direction::In ? inv.inputs : inv.outputs;
        auto it = std::find_if(side.begin(), side.end(), [&](const auto& e) { return e.first == p.model_ref; });
        if (it == side.end()) {
            throw Error(ErrorCode::ArityMismatch,
                        "step \"" + inv.step_id + "\" provides no " + std::string(to_string(p.direction)) +
                            " path for parameter \"" + p.name + "\"");
        }
        values[p.name] = it->second.string();
    }
    std::vector<std::string> args;
    for (const auto& t : tokenize(spec.command)) args.push_back(substitute(t, values));
    if (args.empty()) throw Error(ErrorCode::SpawnFailure, "empty command for \"" + inv.step_id + "\"");

    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view kv(*e);
        auto eq = kv.find('=');
        if (eq != std::string_view::npos) env[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
    }
    for (const auto& [k, v] : inv.env) env[k] = v;
    std::string path_var;
    for (const auto& d : tool_dirs) path_var += d.string() + ":";
    path_var += env.count("PATH") ? env["PATH"] : "/usr/local/bin:/usr/bin:/bin";
    env["PATH"] = path_var;

    auto program = resolve_program(args[0], path_var, inv.workspace);
    if (!program) {
        throw Error(ErrorCode::SpawnFailure, "step \"" + inv.step_id + "\": cannot find executable \"" + args[0] + "\"");
    }

    std::vector<std::string> env_strings;
    for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp, argv;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);
    for (auto& s : args) argv.push_back(s.data());
    argv.push_back(nullptr);

    std::error_code ec;
    fs::create_directories(inv.stdout_log.parent_path(), ec);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 1, inv.stdout_log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, 2, inv.stderr_log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addchdir_np(&actions, inv.workspace.c_str());
    pid_t pid = 0;
    int rc = posix_spawn(&pid, program->c_str(), &actions, nullptr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        throw Error(ErrorCode::SpawnFailure,
                    "step \"" + inv.step_id + "\": cannot spawn " + program->string() + ": " + std::strerror(rc));
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw Error(ErrorCode::SpawnFailure, "waitpid failed: " + std::string(std::strerror(errno)));
    }

    HandlerResult r;
    if (WIFEXITED(status)) {
        r.exit_code = WEXITSTATUS(status);
    } else {
        r.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }
    if (r.exit_code != 0) {
        r.ok = false;
        r.error = ErrorCode::NonZeroExit;
        r.message = args[0] + " exited with status " + std::to_string(r.exit_code);
    }
    return r;
}

}  // namespace

BuiltinOutcome run_builtin_op(std::string_view op, const std::vector<fs::path>& inputs,
                              const std::vector<fs::path>& outputs, std::string_view step_id) {
    auto n_in = inputs.size();
    auto n_out = outputs.size();
    if (op == "copy") {
        expect_arity(op, n_in, 1, 1, n_out, 1);
        write_text_file(outputs[0], read_text_file(inputs[0]));
        return {};
    }
    if (op == "concat") {
        expect_arity(op, n_in, 1, SIZE_MAX, n_out, 1);
        std::string data;
        for (const auto& in : inputs) data += read_text_file(in);
        write_text_file(outputs[0], data);
        return {};
    }
    if (op == "template") {
        expect_arity(op, n_in, 1, 1, n_out, 1);
        write_text_file(outputs[0], "# produced-by: " + std::string(step_id) + "\n" + read_text_file(inputs[0]));
        return {};
    }
    if (op == "fail") return {1, "step \"" + std::string(step_id) + "\" failed on purpose"};
    throw Error(ErrorCode::UsageError, "unknown builtin operation \"" + std::string(op) + "\"");
}

Handler builtin_handler() {
    return {"builtin", [](const StepInvocation& inv) {
                auto cmd = inv.impl.meta.count("command") ? inv.impl.meta.at("command")
                                                          : load_exec_spec(inv.impl_path).command;
                auto op = trim(cmd);
                std::vector<fs::path> ins, outs;
                for (const auto& [pin, path] : inv.inputs) ins.push_back(path);
                for (const auto& [pin, path] : inv.outputs) outs.push_back(path);
                auto outcome = run_builtin_op(op, ins, outs, inv.step_id);
                append_log(inv.stderr_log, outcome.message);
                HandlerResult r;
                r.exit_code = outcome.exit_code;
                if (outcome.exit_code != 0) {
                    r.ok = false;
                    r.error = ErrorCode::NonZeroExit;
                    r.message = outcome.message;
                }
                return r;
            }};
}

Handler exec_handler(std::vector<fs::path> tool_dirs) {
    if (auto self = self_directory(); !self.empty()) tool_dirs.push_back(self);
    return {"exec", [dirs = std::move(tool_dirs)](const StepInvocation& inv) { return run_exec(inv, dirs); }};
}

HandlerRegistry default_handlers(std::vector<fs::path> tool_dirs) {
    HandlerRegistry r;
    r.add(builtin_handler());
    r.add(exec_handler(std::move(tool_dirs)));
    return r;
}

}  // namespace maple
