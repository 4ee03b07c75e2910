#pragma once

// Shared helpers for the test binaries.

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <kgqa/kg_store.hpp>

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
    return std::string(KGQA_FIXTURES) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline kgqa::KnowledgeGraph load_fixture_graph(const std::string& name) {
    return kgqa::load_graph_file(fixture_path(name));
}

struct CommandResult {
    int exit_code = -1;
    std::string output; // stdout only
};

/// Runs a shell command, capturing stdout and the exit code.
inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    FILE* pipe = ::popen(command.c_str(), "r");
    if (!pipe) return result;
    std::array<char, 4096> buf{};
    size_t n;
    while ((n = ::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        result.output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    return result;
}

} // namespace testsupport
