#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "autodb/error.hpp"
#include "autodb/net/server.hpp"

using autodb::net::ServerConfig;

int main(int argc, char** argv) {
  CLI::App app{"autodb server"};
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::string> host, data_dir, log_path;
  std::optional<std::uint16_t> port;
  std::optional<std::size_t> workers;
  bool allow_admin = false;
  app.add_option("-c,--config", config_file, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", settings, "override one setting, key=value (repeatable)");
  app.add_option("--host", host, "address to bind");
  app.add_option("-p,--port", port, "TCP port (0 picks a free one)");
  app.add_option("-w,--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("-d,--data-dir", data_dir, "database directory (env AUTODB_DATA_DIR)");
  app.add_option("--log", log_path, "statement log path");
  app.add_flag("--allow-admin", allow_admin, "accept CHECKPOINT and SHUTDOWN from clients");
  CLI11_PARSE(app, argc, argv);

  ServerConfig config;
  try {
    if (!config_file.empty()) autodb::net::load_config_file(config, config_file);
    if (const char* env = std::getenv("AUTODB_DATA_DIR"); env && *env) config.data_dir = env;
    for (const auto& s : settings) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      autodb::net::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "autodb_server: " << e.what() << "\n";
    return 2;
  }
  if (host) config.host = *host;
  if (port) config.port = *port;
  if (workers) config.worker_count = *workers;
  if (data_dir) config.data_dir = *data_dir;
  if (log_path) config.log_path = *log_path;
  if (allow_admin) config.allow_admin = true;

  // Signals are taken synchronously by one thread; every other thread
  // inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<autodb::net::Server> server;
  try {
    server = autodb::net::Server::start(config);
  } catch (const autodb::DbError& e) {
    std::cerr << "autodb_server: " << autodb::wire_name(e.code()) << " " << e.what() << "\n";
    return 1;
  }
  std::cout << "listening on " << config.host << ":" << server->port() << " data_dir=" << config.data_dir.string()
            << " workers=" << config.worker_count << std::endl;

  std::thread([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server->request_stop();
  }).detach();

  server->wait();
  std::cout << "stopped after " << server->statements_served() << " statements" << std::endl;
  return 0;
}
