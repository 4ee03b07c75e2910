#pragma once

#include <chrono>
#include <string>

#include <kgqa/error.hpp>

namespace kgqa {

/// Address of an external stage implementation: a subprocess command whose
/// stdin/stdout speak one JSON document each, or an HTTP URL accepting a JSON
/// POST.
struct AdapterSpec {
    enum class Kind { Command, Http };
    Kind kind = Kind::Command;
    std::string target;
    std::chrono::milliseconds timeout{30000};

    static AdapterSpec command(std::string cmd,
                               std::chrono::milliseconds timeout = std::chrono::seconds(30));
    static AdapterSpec http(std::string url,
                            std::chrono::milliseconds timeout = std::chrono::seconds(30));
};

struct AdapterTimeout : Error {
    using Error::Error;
};

struct AdapterProtocolError : Error {
    using Error::Error;
};

} // namespace kgqa
