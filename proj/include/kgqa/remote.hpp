#pragma once

#include <chrono>
#include <string>

#include <kgqa/sparql.hpp>

namespace kgqa::sparql {

struct NetworkError : Error {
    using Error::Error;
};

struct HttpStatusError : Error {
    int status;
    explicit HttpStatusError(int status)
        : Error("endpoint returned HTTP " + std::to_string(status)), status(status) {}
};

struct Timeout : Error {
    using Error::Error;
};

/// SPARQL protocol client: POSTs the serialized query as a form-encoded
/// `query=` body and parses the results JSON. `endpoint` is a full URL,
/// e.g. http://host:port/sparql.
ResultTable remote_query(const std::string& endpoint, const SelectQuery& q,
                         std::chrono::milliseconds timeout = std::chrono::seconds(30));

/// Raw-text variant used by the CLI `query` subcommand.
ResultTable remote_query_text(const std::string& endpoint, const std::string& query_text,
                              std::chrono::milliseconds timeout = std::chrono::seconds(30));

} // namespace kgqa::sparql
