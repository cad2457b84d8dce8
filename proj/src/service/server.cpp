#include "arm/service/server.hpp"

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <list>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "arm/common/error.hpp"
#include "arm/service/api.hpp"

namespace arm::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

// Application close codes (4000-4999 range).
const websocket::close_code kCloseUnknownSession = static_cast<websocket::close_code>(4404);
const websocket::close_code kCloseAlreadyStreaming = static_cast<websocket::close_code>(4409);

struct Connection {
    net::io_context ioc;
    tcp::socket socket{ioc};
    std::thread thread;
    int fd = -1; // kept so the socket can be shut down after it moves into a stream
    std::atomic<bool> done = false;

    void shutdown() noexcept
    {
        // Wakes blocking reads on the connection thread.
        if (!done && fd >= 0) ::shutdown(fd, SHUT_RDWR);
    }
};

// One attached stream. Reads and writes run on the connection's io_context;
// frames arrive from the session's pipeline thread.
class Stream : public std::enable_shared_from_this<Stream> {
public:
    Stream(Connection& conn, std::shared_ptr<Session> session)
        : ioc_(conn.ioc), ws_(std::move(conn.socket)), session_(std::move(session)),
          policy_(session_->config().queue_policy)
    {
    }

    websocket::stream<tcp::socket>& ws() { return ws_; }

    void run()
    {
        ws_.read_message_max(64 * 1024);
        std::weak_ptr<Stream> weak = shared_from_this();
        const bool attached = session_->attach(
            [weak](std::string msg) {
                if (auto self = weak.lock()) self->deliver(std::move(msg));
            },
            [weak] {
                if (auto self = weak.lock()) self->request_close();
            });
        if (!attached) {
            beast::error_code ec;
            ws_.close(websocket::close_reason(kCloseAlreadyStreaming, "stream already attached"), ec);
            return;
        }
        send_ack(ack_message("attach", true, session_->state()));
        do_read();
        ioc_.run();
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
        session_->detach();
        // Abort whatever is still queued so no handler outlives the context.
        beast::error_code ec;
        beast::get_lowest_layer(ws_).close(ec);
        ioc_.restart();
        ioc_.run();
    }

private:
    void deliver(std::string msg)
    {
        std::unique_lock lock(mutex_);
        if (closed_) return;
        if (policy_ == pipeline::QueuePolicy::Lossless) {
            cv_.wait(lock, [&] { return !frame_ || closed_; });
            if (closed_) return;
        } else if (frame_) {
            session_->add_dropped(1);
        }
        frame_ = std::move(msg);
        lock.unlock();
        net::post(ioc_, [self = shared_from_this()] { self->pump(); });
    }

    void request_close()
    {
        {
            std::lock_guard lock(mutex_);
            if (closed_ || close_pending_) return;
            close_pending_ = true;
        }
        cv_.notify_all();
        net::post(ioc_, [self = shared_from_this()] { self->pump(); });
    }

    void send_ack(const json& j)
    {
        {
            std::lock_guard lock(mutex_);
            acks_.push_back(j.dump());
        }
        pump();
    }

    // Starts the next write: acks first, then the newest frame, then a pending close.
    void pump()
    {
        std::unique_lock lock(mutex_);
        if (writing_ || closed_) return;
        if (!acks_.empty()) {
            current_ = std::move(acks_.front());
            acks_.pop_front();
        } else if (frame_ && !close_pending_) {
            current_ = std::move(*frame_);
            frame_.reset();
            cv_.notify_all();
        } else if (close_pending_) {
            closed_ = true;
            lock.unlock();
            cv_.notify_all();
            ws_.async_close(websocket::close_reason(websocket::close_code::going_away, "session closed"),
                            [self = shared_from_this()](beast::error_code) {});
            return;
        } else {
            return;
        }
        writing_ = true;
        lock.unlock();
        ws_.text(true);
        ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            {
                std::lock_guard l(self->mutex_);
                self->writing_ = false;
                if (ec) self->closed_ = true;
            }
            self->cv_.notify_all();
            if (!ec) self->pump();
        });
    }

    void do_read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                {
                    std::lock_guard l(self->mutex_);
                    self->closed_ = true;
                }
                self->cv_.notify_all();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->handle(text);
            self->do_read();
        });
    }

    void handle(const std::string& text)
    {
        try {
            const auto cmd = parse_client_message(json::parse(text));
            const auto r = session_->apply(cmd);
            const char* name = std::holds_alternative<StageCommand>(cmd)       ? "stage"
                               : std::holds_alternative<ObjectiveCommand>(cmd) ? "objective"
                                                                               : "display";
            send_ack(ack_message(name, r.status == 200, r.state, r.notices, r.error));
        } catch (const std::exception& e) {
            send_ack(ack_message("invalid", false, session_->state(), {}, e.what()));
        }
    }

    net::io_context& ioc_;
    websocket::stream<tcp::socket> ws_;
    std::shared_ptr<Session> session_;
    pipeline::QueuePolicy policy_;
    beast::flat_buffer buffer_;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> acks_;
    std::optional<std::string> frame_;
    std::string current_;
    bool writing_ = false;
    bool closed_ = false;
    bool close_pending_ = false;
};

void set_common(http::response<http::string_body>& res)
{
    res.set(http::field::server, "arm");
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
}

void serve_websocket(Connection& conn, SessionManager& sessions, http::request<http::string_body>&& req)
{
    const auto target = req.target();
    const auto id = stream_session_id(std::string_view(target.data(), target.size()));
    auto session = id ? sessions.find(*id) : nullptr;
    if (!session) {
        websocket::stream<tcp::socket> ws(std::move(conn.socket));
        beast::error_code ec;
        ws.accept(req, ec);
        if (!ec) ws.close(websocket::close_reason(kCloseUnknownSession, "unknown session"), ec);
        return;
    }
    auto stream = std::make_shared<Stream>(conn, std::move(session));
    beast::error_code ec;
    stream->ws().accept(req, ec);
    if (ec) return;
    stream->run();
}

void serve(Connection& conn, SessionManager& sessions)
{
    beast::flat_buffer buffer;
    for (;;) {
        http::request<http::string_body> req;
        beast::error_code ec;
        http::read(conn.socket, buffer, req, ec);
        if (ec) break;
        if (websocket::is_upgrade(req)) {
            serve_websocket(conn, sessions, std::move(req));
            return;
        }
        http::response<http::string_body> res;
        res.version(req.version());
        res.keep_alive(req.keep_alive());
        set_common(res);
        if (req.method() == http::verb::options) {
            res.result(http::status::no_content);
            res.set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
            res.set(http::field::access_control_allow_headers, "Content-Type");
        } else {
            const auto r = handle_request(sessions, std::string(req.method_string()), std::string(req.target()), req.body());
            res.result(static_cast<unsigned>(r.status));
            res.body() = r.body.dump();
        }
        res.prepare_payload();
        http::write(conn.socket, res, ec);
        if (ec || !req.keep_alive()) break;
    }
    beast::error_code ec;
    conn.socket.shutdown(tcp::socket::shutdown_both, ec);
}

} // namespace

struct Server::Impl {
    Impl(SessionManager& s, ServerOptions o) : sessions(s), options(std::move(o)) {}

    SessionManager& sessions;
    ServerOptions options;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::thread accept_thread;
    std::atomic<bool> stopping = false;
    std::mutex mutex;
    std::list<std::shared_ptr<Connection>> conns;
    unsigned short port = 0;

    void reap()
    {
        std::lock_guard lock(mutex);
        for (auto it = conns.begin(); it != conns.end();) {
            if ((*it)->done) {
                (*it)->thread.join();
                it = conns.erase(it);
            } else {
                ++it;
            }
        }
    }

    void accept_loop()
    {
        while (!stopping) {
            auto c = std::make_shared<Connection>();
            beast::error_code ec;
            acceptor.accept(c->socket, ec);
            if (stopping) break;
            if (ec) continue;
            c->fd = c->socket.native_handle();
            reap();
            std::lock_guard lock(mutex);
            c->thread = std::thread([this, raw = c.get()] {
                try {
                    serve(*raw, sessions);
                } catch (...) {
                }
                raw->done = true;
            });
            conns.push_back(std::move(c));
        }
    }
};

Server::Server(SessionManager& sessions, ServerOptions options) : impl_(std::make_unique<Impl>(sessions, std::move(options)))
{
}

Server::~Server() { stop(); }

unsigned short Server::start()
{
    auto& im = *impl_;
    const tcp::endpoint ep(net::ip::make_address(im.options.address), im.options.port);
    try {
        im.acceptor.open(ep.protocol());
        im.acceptor.set_option(net::socket_base::reuse_address(true));
        im.acceptor.bind(ep);
        im.acceptor.listen();
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::Io, std::string("cannot listen on ") + im.options.address + ":" +
                                       std::to_string(im.options.port) + ": " + e.what());
    }
    im.port = im.acceptor.local_endpoint().port();
    im.accept_thread = std::thread([&im] { im.accept_loop(); });
    return im.port;
}

void Server::stop()
{
    auto& im = *impl_;
    if (!im.accept_thread.joinable()) return;
    im.stopping = true;
    {
        // A throwaway connection wakes the blocking accept.
        net::io_context tmp;
        tcp::socket s(tmp);
        beast::error_code ec;
        const auto addr = im.acceptor.local_endpoint().address();
        s.connect({addr.is_unspecified() ? net::ip::make_address("127.0.0.1") : addr, im.port}, ec);
    }
    im.accept_thread.join();
    beast::error_code ec;
    im.acceptor.close(ec);
    std::list<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lock(im.mutex);
        conns.swap(im.conns);
    }
    for (auto& c : conns) c->shutdown();
    for (auto& c : conns) {
        c->ioc.stop();
        if (c->thread.joinable()) c->thread.join();
    }
}

} // namespace arm::service
