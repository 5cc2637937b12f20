#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "autodb/cache/cache.hpp"
#include "autodb/engine/database.hpp"
#include "autodb/net/wire.hpp"

namespace autodb::net {

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 5433;  // 0 picks a free port
  std::size_t worker_count = 4;
  int accept_backlog = 128;
  cache::CacheConfig cache;
  std::size_t index_order = index::BPlusTree::kDefaultOrder;
  std::optional<std::size_t> step_limit;
  std::filesystem::path data_dir = "data";
  std::filesystem::path log_path;  // empty: <data_dir>/server.log
  bool allow_admin = false;        // CHECKPOINT and SHUTDOWN over the wire
  bool sync_writes = false;

  std::filesystem::path effective_log_path() const;
  engine::EngineConfig engine_config() const;
};

/// Applies one `key=value` setting. Throws std::invalid_argument naming the
/// key on an unknown key or a bad value.
void apply_setting(ServerConfig& config, std::string_view key, std::string_view value);
/// Reads `key=value` lines; blank lines and lines starting with # are skipped.
void load_config_file(ServerConfig& config, const std::filesystem::path& path);

class Server {
 public:
  /// Opens the database, binds, pre-creates the workers and starts accepting.
  /// Throws DbError(kIo) when the address cannot be bound.
  static std::unique_ptr<Server> start(ServerConfig config);

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;
  ~Server();

  std::uint16_t port() const noexcept { return port_; }
  const ServerConfig& config() const noexcept { return config_; }
  engine::Database& database() noexcept { return *db_; }

  /// Asks the server to stop; safe from any thread, including a worker.
  void request_stop();
  /// Blocks until a stop is requested, then stops accepting, lets in-flight
  /// statements finish, persists indexes and closes the log.
  void wait();
  /// request_stop() + wait().
  void shutdown();

  std::size_t in_flight() const noexcept { return in_flight_; }
  std::size_t max_in_flight() const noexcept { return max_in_flight_; }
  std::uint64_t statements_served() const noexcept { return served_; }

 private:
  Server(ServerConfig config, std::unique_ptr<engine::Database> db);

  void accept_loop();
  void worker_loop();
  void serve_connection(int fd);
  void drain_and_close();
  // Returns the response and whether the statement asked for shutdown.
  std::pair<WireResponse, bool> handle(std::string_view request);

  ServerConfig config_;
  std::unique_ptr<engine::Database> db_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;

  std::thread acceptor_;
  std::vector<std::thread> workers_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable queue_space_cv_;
  std::deque<int> queue_;
  std::size_t queue_capacity_;
  bool stopping_ = false;

  std::mutex active_mutex_;
  std::set<int> active_;
  bool draining_ = false;

  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool stop_requested_ = false;
  bool shutdown_started_ = false;
  bool stopped_ = false;

  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
  std::atomic<std::uint64_t> served_{0};
};

}  // namespace autodb::net
