#include "adapter_util.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

namespace kgqa {

AdapterSpec AdapterSpec::command(std::string cmd, std::chrono::milliseconds timeout) {
    return {Kind::Command, std::move(cmd), timeout};
}

AdapterSpec AdapterSpec::http(std::string url, std::chrono::milliseconds timeout) {
    return {Kind::Http, std::move(url), timeout};
}

namespace detail {

namespace {

// A child that exits without reading its stdin must not kill us with SIGPIPE;
// EPIPE during the request write is treated as "input not wanted".
void ignore_sigpipe_once() {
    static const int installed = [] {
        struct sigaction sa{};
        sa.sa_handler = SIG_IGN;
        ::sigaction(SIGPIPE, &sa, nullptr);
        return 0;
    }();
    (void)installed;
}

void write_all(int fd, const std::string& data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EPIPE) return;
            throw AdapterProtocolError(std::string("write to adapter failed: ") +
                                       std::strerror(errno));
        }
        off += static_cast<size_t>(n);
    }
}

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (::pipe(fds) != 0)
            throw AdapterProtocolError(std::string("pipe failed: ") + std::strerror(errno));
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
};

} // namespace

std::string run_subprocess(const std::string& cmd, const std::string& input,
                           std::chrono::milliseconds timeout) {
    ignore_sigpipe_once();
    Pipe to_child;
    Pipe from_child;

    pid_t pid = ::fork();
    if (pid < 0)
        throw AdapterProtocolError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(to_child.fds[0], STDIN_FILENO);
        ::dup2(from_child.fds[1], STDOUT_FILENO);
        ::close(to_child.fds[0]);
        ::close(to_child.fds[1]);
        ::close(from_child.fds[0]);
        ::close(from_child.fds[1]);
        ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    to_child.close_read();
    from_child.close_write();
    write_all(to_child.fds[1], input);
    to_child.close_write();

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::string output;
    char buf[4096];
    while (true) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw AdapterTimeout("adapter command timed out: " + cmd);
        }
        struct pollfd pfd{from_child.fds[0], POLLIN, 0};
        int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (pr < 0) {
            if (errno == EINTR) continue;
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw AdapterProtocolError(std::string("poll failed: ") + std::strerror(errno));
        }
        if (pr == 0) continue; // loop re-checks the deadline
        ssize_t n = ::read(from_child.fds[0], buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR) continue;
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw AdapterProtocolError(std::string("read from adapter failed: ") +
                                       std::strerror(errno));
        }
        if (n == 0) break; // EOF
        output.append(buf, static_cast<size_t>(n));
    }

    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw AdapterProtocolError("adapter command failed (status " +
                                   std::to_string(status) + "): " + cmd);
    return output;
}

nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body,
                              std::chrono::milliseconds timeout) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw AdapterProtocolError("adapter URL must start with http://");
    auto path_start = url.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::ConnectionTimeout ||
            res.error() == httplib::Error::Read || res.error() == httplib::Error::Write)
            throw AdapterTimeout("adapter request to " + url + " timed out");
        throw AdapterProtocolError("adapter request to " + url + " failed: " +
                                   httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300)
        throw AdapterProtocolError("adapter returned HTTP " + std::to_string(res->status));
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
        throw AdapterProtocolError("adapter response is not valid JSON");
    return parsed;
}

nlohmann::json adapter_call(const AdapterSpec& spec, const nlohmann::json& request) {
    if (spec.kind == AdapterSpec::Kind::Http)
        return http_post_json(spec.target, request, spec.timeout);
    std::string raw = run_subprocess(spec.target, request.dump() + "\n", spec.timeout);
    auto parsed = nlohmann::json::parse(raw, nullptr, false);
    if (parsed.is_discarded())
        throw AdapterProtocolError("adapter output is not valid JSON");
    return parsed;
}

} // namespace detail
} // namespace kgqa
