#pragma once

// In-process SPARQL endpoint used by the remote-client tests: /sparql serves
// real evaluation over a graph; the other routes exercise failure handling.

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>

#include <kgqa/kg_store.hpp>
#include <kgqa/sparql.hpp>

namespace testsupport {

class MockEndpoint {
public:
    explicit MockEndpoint(const kgqa::KnowledgeGraph& kg) : kg_(&kg) {
        server_.Post("/sparql", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string text = req.get_param_value("query");
            try {
                auto table = kgqa::sparql::evaluate(*kg_, kgqa::sparql::parse_select(text));
                res.set_content(kgqa::sparql::serialize_results(table),
                                "application/sparql-results+json");
            } catch (const kgqa::Error& e) {
                res.status = 400;
                res.set_content(e.what(), "text/plain");
            }
        });
        server_.Post("/error500", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
        server_.Post("/badjson", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("this is { not json", "application/sparql-results+json");
        });
        server_.Post("/noshape", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"unexpected\":true}", "application/sparql-results+json");
        });
        server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1500));
            res.set_content("{\"head\":{\"vars\":[]},\"results\":{\"bindings\":[]}}",
                            "application/sparql-results+json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockEndpoint() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url(const std::string& path = "/sparql") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    const kgqa::KnowledgeGraph* kg_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace testsupport
