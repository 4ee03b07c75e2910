#pragma once

// Internal transport helpers shared by the external-adapter clients.

#include <string>

#include <json.hpp>

#include <kgqa/adapter.hpp>

namespace kgqa::detail {

/// Runs `sh -c cmd`, feeds `input` on stdin, returns captured stdout.
/// Throws AdapterTimeout when the deadline passes and AdapterProtocolError
/// when the process cannot be spawned or exits non-zero.
std::string run_subprocess(const std::string& cmd, const std::string& input,
                           std::chrono::milliseconds timeout);

/// POSTs a JSON document and parses the JSON reply.
nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body,
                              std::chrono::milliseconds timeout);

/// Dispatches a request document over the adapter's transport.
nlohmann::json adapter_call(const AdapterSpec& spec, const nlohmann::json& request);

} // namespace kgqa::detail
