#pragma once

#include <memory>
#include <string>

#include "arm/service/session.hpp"

namespace arm::service {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080; // 0 picks a free port
};

// HTTP and WebSocket on one port, one thread per connection. Each WebSocket
// stream owns its session's pipeline while attached.
class Server {
public:
    Server(SessionManager& sessions, ServerOptions options = {});
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts accepting; returns the bound port.
    unsigned short start();
    // Closes the listener and every connection, then joins their threads.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace arm::service
