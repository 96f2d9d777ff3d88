#pragma once

#include <memory>
#include <string>

#include "mmsc/gateway.hpp"

namespace mmsc {

// Local HTTP endpoint speaking the chat-completions schema, answering from
// a script keyed by utterance id (plus prompt, detected from the
// instruction text) with deterministic synthesis as fallback. Lets the live
// HTTP path be exercised end to end without a real model server.
class MockServer {
public:
    explicit MockServer(MockBackend::Script script = {});
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds and serves on a background thread. port 0 picks a free port.
    // Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    int port() const;
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace mmsc
