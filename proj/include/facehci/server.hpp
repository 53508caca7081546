/**
 * @file server.hpp
 * @brief Single-session WebSocket service around LiveSession.
 *
 * One io thread owns the sockets. Each accepted session gets a processing
 * thread fed by a bounded queue: when full, the oldest pending frame is
 * dropped (commands are never dropped). Replies are posted back to the io
 * thread, which serializes writes. A second concurrent client receives a
 * "busy" error and is closed.
 */
#pragma once

#include "facehci/wire.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

namespace facehci {

/// Bounded FIFO of messages. push() on a full queue evicts the oldest
/// droppable item; if none is droppable the queue grows past capacity.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
        require(capacity >= 1, Errc::InvalidInput, "queue capacity must be >= 1");
    }

    /// Returns the evicted item, if any.
    std::optional<T> push(T item, bool droppable) {
        std::optional<T> evicted;
        {
            std::lock_guard lock(mu_);
            if (closed_) return std::nullopt;
            if (items_.size() >= capacity_ && droppable) {
                for (auto it = items_.begin(); it != items_.end(); ++it) {
                    if (it->second) {
                        evicted = std::move(it->first);
                        items_.erase(it);
                        break;
                    }
                }
            }
            items_.emplace_back(std::move(item), droppable);
        }
        cv_.notify_one();
        return evicted;
    }

    /// Blocks until an item arrives; empty once closed and drained.
    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front().first);
        items_.pop_front();
        return item;
    }

    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return items_.size();
    }

private:
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::pair<T, bool>> items_;
    bool closed_ = false;
};

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

class Server;

namespace detail {

struct Job {
    bool binary = false;
    std::string payload;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Server& server, bool reject);
    void start();
    void shutdown();
    bool ended() const noexcept { return ended_; }

private:
    void on_accept(beast::error_code ec);
    void read();
    void on_read(beast::error_code ec, std::size_t);
    void send(std::string text);
    void write_next();
    void end_session();
    void work();

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    Server& server_;
    bool reject_;
    bool closing_ = false;
    std::atomic<bool> ended_{false};
    BoundedQueue<Job> jobs_{2};
};

} // namespace detail

class Server {
public:
    explicit Server(PipelineConfig cfg, Clock clock = steady_clock_seconds())
        : cfg_(std::move(cfg)), clock_(std::move(clock)), acceptor_(ioc_) {
        cfg_.validate();
    }

    ~Server() {
        stop();
        if (io_thread_.joinable()) io_thread_.join();
        wait_for_workers();
    }

    /// Binds and listens; port 0 picks an ephemeral port. Returns the port.
    unsigned short listen(const std::string& host, unsigned short port) {
        const tcp::endpoint ep(net::ip::make_address(host), port);
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen();
        accept();
        return acceptor_.local_endpoint().port();
    }

    /// Runs the io loop on the calling thread until stop().
    void run() {
        ioc_.run();
        wait_for_workers();
    }

    /// Runs the io loop on a background thread.
    void start() { io_thread_ = std::thread([this] { ioc_.run(); }); }

    void stop() {
        net::post(ioc_, [this] {
            beast::error_code ec;
            acceptor_.close(ec);
            if (signals_) signals_->cancel(ec);
            if (auto c = active_.lock()) c->shutdown();
        });
    }

    /// Stops the server on SIGINT or SIGTERM.
    void stop_on_signals() {
        signals_.emplace(ioc_, SIGINT, SIGTERM);
        signals_->async_wait([this](beast::error_code ec, int) {
            if (!ec) stop();
        });
    }

    const PipelineConfig& config() const noexcept { return cfg_; }
    const Clock& clock() const noexcept { return clock_; }

private:
    friend class detail::Connection;

    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            const auto current = active_.lock();
            const bool reject = current && !current->ended();
            auto conn = std::make_shared<detail::Connection>(std::move(socket), *this, reject);
            if (!reject) active_ = conn;
            conn->start();
            accept();
        });
    }

    void worker_started() {
        std::lock_guard lock(workers_mu_);
        ++workers_;
    }
    void worker_finished() {
        {
            std::lock_guard lock(workers_mu_);
            --workers_;
        }
        workers_cv_.notify_all();
    }
    void wait_for_workers() {
        std::unique_lock lock(workers_mu_);
        workers_cv_.wait(lock, [&] { return workers_ == 0; });
    }

    PipelineConfig cfg_;
    Clock clock_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::weak_ptr<detail::Connection> active_;
    std::optional<net::signal_set> signals_;
    std::thread io_thread_;
    std::mutex workers_mu_;
    std::condition_variable workers_cv_;
    int workers_ = 0;
};

namespace detail {

inline Connection::Connection(tcp::socket socket, Server& server, bool reject)
    : ws_(std::move(socket)), server_(server), reject_(reject) {}

inline void Connection::start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kFrameHeaderSize + static_cast<std::size_t>(kMaxFrameWidth) * kMaxFrameHeight + 1024);
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] {
        self->ws_.async_accept([self](beast::error_code ec) { self->on_accept(ec); });
    });
}

inline void Connection::shutdown() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] {
        self->end_session();
        beast::error_code ec;
        beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
}

inline void Connection::on_accept(beast::error_code ec) {
    if (ec) return end_session();
    if (reject_) {
        closing_ = true;
        send(error_reply({"busy", "another session is active"}).dump());
        return;
    }
    server_.worker_started();
    std::thread([self = shared_from_this()]() mutable {
        Server& server = self->server_;
        self->work();
        // Release the connection before signalling, so the server cannot tear
        // down the io context while this thread still owns a stream.
        self.reset();
        server.worker_finished();
    }).detach();
    read();
}

inline void Connection::read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t n) { self->on_read(ec, n); });
}

inline void Connection::on_read(beast::error_code ec, std::size_t) {
    if (ec) return end_session();
    Job job{ws_.got_binary(), beast::buffers_to_string(buffer_.data())};
    buffer_.consume(buffer_.size());
    const bool droppable = job.binary;
    if (auto dropped = jobs_.push(std::move(job), droppable))
        send(error_reply({"dropped", "frame dropped: processing is behind"}).dump());
    read();
}

inline void Connection::send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write_next();
}

inline void Connection::write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        self->outbox_.pop_front();
        if (ec) return self->end_session();
        if (!self->outbox_.empty()) return self->write_next();
        if (self->closing_)
            self->ws_.async_close(websocket::close_code::try_again_later, [self](beast::error_code) {});
    });
}

inline void Connection::end_session() {
    if (ended_.exchange(true)) return;
    jobs_.close();
}

inline void Connection::work() {
    LiveSession live(server_.config(), server_.clock());
    while (auto job = jobs_.pop()) {
        nlohmann::json reply;
        try {
            reply = job->binary ? live.on_binary(job->payload) : live.on_text(job->payload);
        } catch (const std::exception& e) {
            reply = error_reply({"internal", e.what()});
        }
        net::post(ws_.get_executor(), [self = shared_from_this(), text = reply.dump()]() mutable {
            if (!self->ended_) self->send(std::move(text));
        });
    }
}

} // namespace detail

/// Parses "host:port".
inline std::pair<std::string, unsigned short> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    require(colon != std::string::npos && colon > 0 && colon + 1 < bind.size(), Errc::InvalidInput,
            "bind address must look like host:port");
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(bind.substr(colon + 1), &used);
        require(used == bind.size() - colon - 1, Errc::InvalidInput, "bad port");
    } catch (const std::logic_error&) {
        fail(Errc::InvalidInput, "bad port in " + bind);
    }
    require(port >= 0 && port <= 65535, Errc::InvalidInput, "port out of range");
    return {bind.substr(0, colon), static_cast<unsigned short>(port)};
}

} // namespace facehci
