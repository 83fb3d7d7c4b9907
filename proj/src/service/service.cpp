#include "adcmd/service/service.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "adcmd/error.hpp"

namespace adcmd::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

void validate_config(const ServiceConfig& c) {
  loop::validate_config(c.defaults);
  if (c.log_dir.empty()) throw Error(ErrorCode::invalid_config, "log directory is empty");
  if (c.threads < 1 || c.threads > 64) throw Error(ErrorCode::invalid_config, "threads outside [1, 64]");
  if (c.options.state_every < 1 || c.options.summary_every < 1 || c.options.metrics_every < 1)
    throw Error(ErrorCode::invalid_config, "stream intervals must be positive");
  boost::system::error_code ec;
  net::ip::make_address(c.host, ec);
  if (ec) throw Error(ErrorCode::invalid_config, "listen address is not an IP address: " + c.host);
}

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  j = {{"host", c.host},
       {"port", c.port},
       {"log_dir", c.log_dir},
       {"defaults", c.defaults},
       {"state_every", c.options.state_every},
       {"summary_every", c.options.summary_every},
       {"metrics_every", c.options.metrics_every},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  static const std::set<std::string> known{"host",          "port",          "log_dir", "defaults", "state_every",
                                           "summary_every", "metrics_every", "threads"};
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "service config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (known.count(k) == 0) throw Error(ErrorCode::invalid_config, "unknown service config key " + k);
  ServiceConfig d;
  try {
    d.host = j.value("host", d.host);
    const std::int64_t port = j.value("port", std::int64_t{d.port});
    if (port < 0 || port > 65535) throw Error(ErrorCode::invalid_config, "port outside 0..65535");
    d.port = static_cast<std::uint16_t>(port);
    d.log_dir = j.value("log_dir", d.log_dir);
    if (j.contains("defaults")) d.defaults = j["defaults"].get<loop::SessionConfig>();
    d.options.state_every = j.value("state_every", d.options.state_every);
    d.options.summary_every = j.value("summary_every", d.options.summary_every);
    d.options.metrics_every = j.value("metrics_every", d.options.metrics_every);
    d.threads = j.value("threads", d.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("service config: ") + e.what());
  }
  c = d;
}

loop::SessionConfig session_config_from(const loop::SessionConfig& defaults, const nlohmann::json& body) {
  if (body.is_null()) return defaults;
  if (!body.is_object()) throw Error(ErrorCode::invalid_config, "session body must be a JSON object");
  loop::SessionConfig base = defaults;
  nlohmann::json patch = body;
  try {
    // "seed" is shorthand for a default map and economy with that seed.
    if (patch.contains("seed")) {
      const std::int64_t seed = patch["seed"].get<std::int64_t>();
      if (seed < 0) throw Error(ErrorCode::invalid_config, "seed must be non-negative");
      const std::int64_t limit = base.game.tick_limit;
      base.game = rts::default_config(static_cast<std::uint64_t>(seed));
      base.game.tick_limit = limit;
      patch.erase("seed");
    }
    if (patch.contains("difficulty")) {
      patch["opponent_difficulty"] = patch["difficulty"];
      patch.erase("difficulty");
    }
    patch.erase("advisor");
    nlohmann::json merged = base;
    merged.merge_patch(patch);
    merged["advisor"] = defaults.advisor;
    loop::SessionConfig out = merged.get<loop::SessionConfig>();
    loop::validate_config(out);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("session config: ") + e.what());
  }
}

namespace {

int status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_config:
    case ErrorCode::validation: return 400;
    case ErrorCode::unknown_session: return 404;
    case ErrorCode::session_ended: return 409;
    default: return 500;
  }
}

std::string error_body(ErrorCode code, const std::string& message) {
  return nlohmann::json{{"error", {{"code", to_string(code)}, {"message", message}}}}.dump();
}

// /session/<id>[/<rest>]
bool split_session_path(std::string_view target, std::string& id, std::string& rest) {
  constexpr std::string_view prefix = "/session/";
  if (target.substr(0, prefix.size()) != prefix) return false;
  target.remove_prefix(prefix.size());
  const auto q = target.find('?');
  if (q != std::string_view::npos) target = target.substr(0, q);
  const auto slash = target.find('/');
  id = std::string(target.substr(0, slash));
  rest = slash == std::string_view::npos ? "" : std::string(target.substr(slash + 1));
  return !id.empty();
}

}  // namespace

struct SessionService::Impl {
  ServiceConfig config;
  // Destroyed by stop() so every socket still open gets closed.
  std::unique_ptr<net::io_context> ioc = std::make_unique<net::io_context>();
  std::unique_ptr<tcp::acceptor> acceptor = std::make_unique<tcp::acceptor>(*ioc);
  std::unique_ptr<net::signal_set> signals = std::make_unique<net::signal_set>(*ioc);
  std::uint16_t port = 0;
  std::atomic<int> live_ws{0};
  std::vector<std::thread> threads;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;

  mutable std::mutex mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t created = 0;
  std::uint64_t http_requests = 0;
  std::uint64_t ws_connections = 0;
  std::mt19937_64 rng{std::random_device{}()};

  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stop_requested = false;
  bool stopped = false;
  bool started = false;

  explicit Impl(ServiceConfig c) : config(std::move(c)) {}

  void accept();
  std::shared_ptr<Session> create(const nlohmann::json& body);
  http::response<http::string_body> respond(const http::request<http::string_body>& req);
  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(mu);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::unknown_session, "no session " + id);
    return it->second;
  }
};

namespace {

class WsConnection : public Subscriber, public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<Session> session, std::atomic<int>& live)
      : ws_(std::move(socket)), session_(std::move(session)), live_(live) {
    ++live_;
  }
  ~WsConnection() override { --live_; }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    net::dispatch(ws_.get_executor(), [self = shared_from_this(), req = std::move(req)]() mutable {
      self->ws_.async_accept(req, [self](beast::error_code ec) { self->on_accept(ec); });
    });
  }

  void send(std::string frame) override {
    net::post(ws_.get_executor(), [self = shared_from_this(), f = std::move(frame)]() mutable {
      if (self->closing_) return;
      self->queue_.push_back(std::move(f));
      if (self->queue_.size() == 1) self->write_next();
    });
  }

  void close() override {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closing_) return;
      self->closing_ = true;
      if (self->queue_.empty()) self->do_close();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    session_->subscribe(shared_from_this());
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      session_->unsubscribe(this);
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    // Blocks this strand until the loop has taken the frame.
    session_->handle_client(text, shared_from_this());
    read_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_write(ec);
    });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      queue_.clear();
      session_->unsubscribe(this);
      return;
    }
    queue_.pop_front();
    if (!queue_.empty())
      write_next();
    else if (closing_)
      do_close();
  }

  void do_close() {
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Session> session_;
  std::deque<std::string> queue_;
  bool closing_ = false;
  std::atomic<int>& live_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, SessionService::Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read_next(); });
  }

 private:
  void read_next() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      std::string id;
      std::string rest;
      if (split_session_path(std::string(req_.target()), id, rest) && rest == "ws") {
        try {
          auto session = impl_.find(id);
          {
            std::lock_guard lock(impl_.mu);
            ++impl_.ws_connections;
          }
          stream_.expires_never();
          std::make_shared<WsConnection>(stream_.release_socket(), std::move(session), impl_.live_ws)->run(std::move(req_));
          return;
        } catch (const Error&) {
          // Falls through to a 404 below.
        }
      }
    }
    auto res = std::make_shared<http::response<http::string_body>>(impl_.respond(req_));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec2, std::size_t) {
      if (ec2 || !res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read_next();
    });
  }

  beast::tcp_stream stream_;
  SessionService::Impl& impl_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

// An HTTP-level failure that is not an Error, such as a wrong method.
struct HttpFailure {
  int status;
  std::string message;
};

}  // namespace

std::shared_ptr<Session> SessionService::Impl::create(const nlohmann::json& body) {
  const loop::SessionConfig sc = session_config_from(config.defaults, body);
  std::string sid;
  {
    std::lock_guard lock(mu);
    sid = fmt::format("s{:04d}-{:08x}", ++created, static_cast<std::uint32_t>(rng()));
  }
  const std::string path = (std::filesystem::path(config.log_dir) / (sid + ".jsonl")).string();
  auto session = std::make_shared<Session>(sid, sc, path, config.options);
  session->start();
  std::lock_guard lock(mu);
  sessions[sid] = session;
  return session;
}

void SessionService::Impl::accept() {
  acceptor->async_accept(net::make_strand(*ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpConnection>(std::move(socket), *this)->run();
    accept();
  });
}

http::response<http::string_body> SessionService::Impl::respond(const http::request<http::string_body>& req) {
  {
    std::lock_guard lock(mu);
    ++http_requests;
  }
  http::response<http::string_body> res;
  res.version(req.version());
  res.keep_alive(req.keep_alive());
  res.set(http::field::content_type, "application/json");
  const auto fail = [&res](ErrorCode code, const std::string& message, int status = 0) {
    res.result(status != 0 ? status : status_for(code));
    res.body() = error_body(code, message);
  };
  const std::string target(req.target());
  const auto require = [&req](http::verb v) {
    if (req.method() != v) throw HttpFailure{405, fmt::format("use {}", std::string(http::to_string(v)))};
  };
  try {
    std::string id;
    std::string rest;
    if (target == "/session" || target == "/session/") {
      require(http::verb::post);
      nlohmann::json body;
      if (!req.body().empty()) {
        body = nlohmann::json::parse(req.body(), nullptr, false);
        if (body.is_discarded()) throw Error(ErrorCode::invalid_config, "body is not JSON");
      }
      const auto session = create(body);
      res.result(http::status::created);
      res.body() = nlohmann::json{{"session_id", session->id()},
                                  {"phase", loop::to_string(session->phase())},
                                  {"log", session->log_path()}}
                       .dump();
    } else if (target == "/metrics") {
      require(http::verb::get);
      nlohmann::json per = nlohmann::json::array();
      std::size_t active = 0;
      nlohmann::json totals;
      std::vector<std::shared_ptr<Session>> list;
      {
        std::lock_guard lock(mu);
        for (const auto& [k, s] : sessions) list.push_back(s);
        totals = {{"sessions_created", created}, {"http_requests", http_requests}, {"ws_connections", ws_connections}};
      }
      for (const auto& s : list) {
        per.push_back(s->metrics());
        if (!s->ended()) ++active;
      }
      totals["sessions_active"] = active;
      totals["sessions"] = per;
      res.result(http::status::ok);
      res.body() = totals.dump();
    } else if (split_session_path(target, id, rest)) {
      require(http::verb::get);
      const auto session = find(id);
      if (rest.empty()) {
        res.result(http::status::ok);
        res.body() = session->snapshot().dump();
      } else if (rest == "log") {
        std::ifstream in(session->log_path(), std::ios::binary);
        if (!in) throw Error(ErrorCode::io, "cannot read log of " + id);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        res.result(http::status::ok);
        res.set(http::field::content_type, "application/x-ndjson");
        res.body() = bytes.str();
      } else if (rest == "ws") {
        throw HttpFailure{426, "web-socket upgrade required"};
      } else {
        throw HttpFailure{404, "no such resource"};
      }
    } else {
      throw HttpFailure{404, "no such resource"};
    }
  } catch (const Error& e) {
    fail(e.code(), e.what());
  } catch (const HttpFailure& f) {
    fail(ErrorCode::validation, f.message, f.status);
  }
  res.prepare_payload();
  return res;
}

SessionService::SessionService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  validate_config(impl_->config);
}

SessionService::~SessionService() { stop(); }

void SessionService::start() {
  Impl& m = *impl_;
  if (m.started) return;
  std::error_code fec;
  std::filesystem::create_directories(m.config.log_dir, fec);
  if (fec) throw Error(ErrorCode::io, "cannot create log directory " + m.config.log_dir);
  beast::error_code ec;
  const tcp::endpoint ep(net::ip::make_address(m.config.host), m.config.port);
  m.acceptor->open(ep.protocol(), ec);
  if (!ec) m.acceptor->set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) m.acceptor->bind(ep, ec);
  if (!ec) m.acceptor->listen(net::socket_base::max_listen_connections, ec);
  if (ec)
    throw Error(ErrorCode::io, fmt::format("cannot listen on {}:{}: {}", m.config.host, m.config.port, ec.message()));
  m.signals->add(SIGINT, ec);
  m.signals->add(SIGTERM, ec);
  m.signals->async_wait([this](beast::error_code e, int) {
    if (!e) request_stop();
  });
  m.accept();
  m.port = m.acceptor->local_endpoint().port();
  m.work.emplace(m.ioc->get_executor());
  for (int i = 0; i < m.config.threads; ++i) m.threads.emplace_back([&m] { m.ioc->run(); });
  m.started = true;
}

std::uint16_t SessionService::port() const {
  return impl_->port;
}

void SessionService::request_stop() {
  std::lock_guard lock(impl_->stop_mu);
  impl_->stop_requested = true;
  impl_->stop_cv.notify_all();
}

void SessionService::wait_for_stop_signal() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [this] { return impl_->stop_requested; });
}

void SessionService::stop() {
  Impl& m = *impl_;
  {
    std::lock_guard lock(m.stop_mu);
    if (m.stopped) return;
    m.stopped = true;
    m.stop_requested = true;
    m.stop_cv.notify_all();
  }
  std::vector<std::shared_ptr<Session>> list;
  {
    std::lock_guard lock(m.mu);
    for (const auto& [k, s] : m.sessions) list.push_back(s);
  }
  for (const auto& s : list) s->stop();
  if (!m.started) return;
  net::post(*m.ioc, [&m] {
    beast::error_code ec;
    m.acceptor->close(ec);
    m.signals->cancel(ec);
  });
  m.work.reset();
  // Give closing frames a moment to go out, then stop hard.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(1000);
  while (m.live_ws > 0 && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  m.ioc->stop();
  for (auto& t : m.threads) t.join();
  m.threads.clear();
  // Drops the remaining connections, closing their sockets.
  m.signals.reset();
  m.acceptor.reset();
  m.ioc.reset();
}

std::string SessionService::create_session(const nlohmann::json& body) { return impl_->create(body)->id(); }

std::shared_ptr<Session> SessionService::find(const std::string& id) const { return impl_->find(id); }

nlohmann::json SessionService::metrics() const {
  nlohmann::json per = nlohmann::json::array();
  std::vector<std::shared_ptr<Session>> list;
  {
    std::lock_guard lock(impl_->mu);
    for (const auto& [k, s] : impl_->sessions) list.push_back(s);
  }
  for (const auto& s : list) per.push_back(s->metrics());
  return {{"sessions", per}};
}

}  // namespace adcmd::service
