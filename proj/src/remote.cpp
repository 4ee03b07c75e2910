#include <kgqa/remote.hpp>

#include <httplib.h>

namespace kgqa::sparql {

namespace {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw NetworkError("endpoint URL must start with http://");
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

ResultTable post_query(const std::string& endpoint, const std::string& query_text,
                       std::chrono::milliseconds timeout) {
    auto [base, path] = split_url(endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers{{"Accept", "application/sparql-results+json"}};
    auto res = client.Post(path, headers, "query=" + url_encode(query_text),
                           "application/x-www-form-urlencoded");
    if (!res) {
        switch (res.error()) {
            case httplib::Error::ConnectionTimeout:
            case httplib::Error::Read:
            case httplib::Error::Write:
                throw Timeout("request to " + endpoint + " timed out");
            default:
                throw NetworkError("request to " + endpoint + " failed: " +
                                   httplib::to_string(res.error()));
        }
    }
    if (res->status < 200 || res->status >= 300) throw HttpStatusError(res->status);
    return parse_results(res->body);
}

} // namespace

ResultTable remote_query(const std::string& endpoint, const SelectQuery& q,
                         std::chrono::milliseconds timeout) {
    return post_query(endpoint, serialize_query(q), timeout);
}

ResultTable remote_query_text(const std::string& endpoint, const std::string& query_text,
                              std::chrono::milliseconds timeout) {
    return post_query(endpoint, query_text, timeout);
}

} // namespace kgqa::sparql
