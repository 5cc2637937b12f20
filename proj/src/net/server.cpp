#include "autodb/net/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "autodb/error.hpp"
#include "autodb/sql/parser.hpp"

namespace autodb::net {

namespace fs = std::filesystem;

fs::path ServerConfig::effective_log_path() const {
  return log_path.empty() ? data_dir / "server.log" : log_path;
}

engine::EngineConfig ServerConfig::engine_config() const {
  engine::EngineConfig e;
  e.cache = cache;
  e.index_order = index_order;
  e.step_limit = step_limit;
  e.sync_writes = sync_writes;
  e.log_path = effective_log_path();
  return e;
}

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value, T min_value) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size() || out < min_value) {
    throw std::invalid_argument("bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("bad value '" + std::string(value) + "' for " + std::string(key));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void apply_setting(ServerConfig& c, std::string_view key, std::string_view value) {
  if (key == "host") {
    c.host = std::string(value);
  } else if (key == "port") {
    c.port = parse_number<std::uint16_t>(key, value, 0);
  } else if (key == "worker_count") {
    c.worker_count = parse_number<std::size_t>(key, value, 1);
  } else if (key == "accept_backlog") {
    c.accept_backlog = parse_number<int>(key, value, 1);
  } else if (key == "page_size") {
    c.cache.page_size = parse_number<std::size_t>(key, value, 1);
  } else if (key == "cache_capacity") {
    c.cache.capacity = parse_number<std::size_t>(key, value, 1);
  } else if (key == "cache_policy") {
    auto p = cache::parse_policy(value);
    if (!p) throw std::invalid_argument("unknown cache_policy '" + std::string(value) + "'");
    c.cache.policy = *p;
  } else if (key == "index_order") {
    c.index_order = parse_number<std::size_t>(key, value, 3);
  } else if (key == "step_limit") {
    c.step_limit = parse_number<std::size_t>(key, value, 1);
  } else if (key == "data_dir") {
    c.data_dir = std::string(value);
  } else if (key == "log_path") {
    c.log_path = std::string(value);
  } else if (key == "allow_admin") {
    c.allow_admin = parse_bool(key, value);
  } else if (key == "sync_writes") {
    c.sync_writes = parse_bool(key, value);
  } else {
    throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
  }
}

void load_config_file(ServerConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(n) + ": expected key=value");
    }
    apply_setting(config, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------

Server::Server(ServerConfig config, std::unique_ptr<engine::Database> db)
    : config_(std::move(config)),
      db_(std::move(db)),
      queue_capacity_(std::max<std::size_t>(static_cast<std::size_t>(config_.accept_backlog), config_.worker_count)) {}

std::unique_ptr<Server> Server::start(ServerConfig config) {
  std::error_code ec;
  fs::create_directories(config.data_dir, ec);
  auto db = engine::Database::open(config.data_dir, config.engine_config());
  std::unique_ptr<Server> server(new Server(std::move(config), std::move(db)));
  const ServerConfig& c = server->config_;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(c.port);
  if (int rc = ::getaddrinfo(c.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw DbError(ErrorCode::kIo, "cannot resolve " + c.host + ": " + ::gai_strerror(rc));
  }
  int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  int one = 1;
  if (fd >= 0) ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (fd < 0 || ::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, c.accept_backlog) != 0) {
    std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    if (fd >= 0) ::close(fd);
    throw DbError(ErrorCode::kIo, "cannot listen on " + c.host + ":" + port + ": " + why);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  server->listen_fd_ = fd;
  server->port_ = ntohs(bound.sin_port);

  for (std::size_t i = 0; i < c.worker_count; ++i) server->workers_.emplace_back([s = server.get()] { s->worker_loop(); });
  server->acceptor_ = std::thread([s = server.get()] { s->accept_loop(); });
  return server;
}

Server::~Server() {
  try {
    shutdown();
  } catch (...) {
  }
}

void Server::accept_loop() {
  while (true) {
    int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      std::lock_guard lock(queue_mutex_);
      if (stopping_) return;
      continue;
    }
    std::unique_lock lock(queue_mutex_);
    queue_space_cv_.wait(lock, [&] { return stopping_ || queue_.size() < queue_capacity_; });
    if (stopping_) {
      ::close(fd);
      return;
    }
    queue_.push_back(fd);
    queue_cv_.notify_one();
  }
}

void Server::worker_loop() {
  while (true) {
    int fd;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      fd = queue_.front();
      queue_.pop_front();
      queue_space_cv_.notify_one();
    }
    serve_connection(fd);
  }
}

void Server::serve_connection(int fd) {
  {
    std::lock_guard lock(active_mutex_);
    active_.insert(fd);
    if (draining_) ::shutdown(fd, SHUT_RD);
  }
  const ByteSource source = socket_source(fd);
  bool stop_after = false;
  try {
    while (!stop_after) {
      std::string request;
      try {
        request = read_frame(source, kMaxRequestPayload);
      } catch (const DbError& e) {
        if (e.code() == ErrorCode::kFrameTooLarge || e.code() == ErrorCode::kTruncatedFrame) {
          write_all(fd, encode_frame(encode_response(to_wire(e.code(), e.what())), kMaxResponsePayload));
        }
        break;
      }
      auto [response, shutdown_requested] = handle(request);
      std::string payload = encode_response(response);
      if (payload.size() > kMaxResponsePayload) {
        payload = encode_response(to_wire(ErrorCode::kFrameTooLarge, "result exceeds the response size limit"));
      }
      write_all(fd, encode_frame(payload, kMaxResponsePayload));
      stop_after = shutdown_requested;
    }
  } catch (const DbError&) {
    // peer went away mid-write
  }
  {
    std::lock_guard lock(active_mutex_);
    active_.erase(fd);
  }
  ::close(fd);
  if (stop_after) request_stop();
}

std::pair<WireResponse, bool> Server::handle(std::string_view request) {
  sql::Statement statement;
  try {
    sql::ParseOptions options;
    options.step_limit = config_.step_limit;
    statement = sql::parse(request, options);
  } catch (const DbError& e) {
    return {to_wire(e.code(), e.what()), false};
  }
  const bool admin = std::holds_alternative<sql::Checkpoint>(statement) || std::holds_alternative<sql::Shutdown>(statement);
  if (admin && !config_.allow_admin) {
    return {to_wire(ErrorCode::kAdminDisabled, "admin statements are disabled on this server"), false};
  }
  if (std::holds_alternative<sql::Shutdown>(statement)) return {CountResponse{0}, true};

  std::size_t now = ++in_flight_;
  std::size_t seen = max_in_flight_;
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  engine::ExecResult result = db_->execute(statement, request);
  --in_flight_;
  ++served_;
  return {to_wire(result), false};
}

void Server::request_stop() {
  std::lock_guard lock(stop_mutex_);
  stop_requested_ = true;
  stop_cv_.notify_all();
}

void Server::wait() {
  std::unique_lock lock(stop_mutex_);
  stop_cv_.wait(lock, [&] { return stop_requested_; });
  if (shutdown_started_) {
    stop_cv_.wait(lock, [&] { return stopped_; });
    return;
  }
  shutdown_started_ = true;
  lock.unlock();
  drain_and_close();
  lock.lock();
  stopped_ = true;
  stop_cv_.notify_all();
}

void Server::shutdown() {
  request_stop();
  wait();
}

void Server::drain_and_close() {
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
    for (int fd : queue_) ::close(fd);
    queue_.clear();
  }
  queue_cv_.notify_all();
  queue_space_cv_.notify_all();
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    // Readers see end of stream once their current statement is answered.
    std::lock_guard lock(active_mutex_);
    draining_ = true;
    for (int fd : active_) ::shutdown(fd, SHUT_RD);
  }
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  db_->close();
}

}  // namespace autodb::net
