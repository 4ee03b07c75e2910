// Test stand-in for an external decomposition model speaking the subprocess
// adapter protocol: one JSON request on stdin, one JSON reply on stdout.
//
//   --sleep-ms N    delay before answering (timeout tests)
//   --garbage       emit something that is not JSON
//   --forward-ref   emit steps containing a forward reference

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

int main(int argc, char** argv) {
    long sleep_ms = 0;
    bool garbage = false, forward_ref = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--sleep-ms" && i + 1 < argc) sleep_ms = std::stol(argv[++i]);
        else if (arg == "--garbage") garbage = true;
        else if (arg == "--forward-ref") forward_ref = true;
    }

    std::string input((std::istreambuf_iterator<char>(std::cin)),
                      std::istreambuf_iterator<char>());
    auto request = nlohmann::json::parse(input, nullptr, false);
    if (request.is_discarded() || !request.contains("question")) {
        std::cerr << "bad request\n";
        return 1;
    }

    if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
    if (garbage) {
        std::cout << "%%% not json %%%\n";
        return 0;
    }

    nlohmann::json reply;
    if (forward_ref)
        reply["steps"] = {"#1 Tehran", "#2 city #3", "#3 area code #2"};
    else
        reply["steps"] = {"#1 Tehran", "#2 city #1", "#3 area code #2"};
    std::cout << reply.dump() << "\n";
    return 0;
}
