#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "autodb/net/wire.hpp"

namespace autodb::client {

/// One connection, one request in flight at a time.
class ClientSession {
 public:
  /// Throws DbError(kIo) when the server cannot be reached.
  static ClientSession connect(const std::string& host, std::uint16_t port);

  ClientSession(ClientSession&& other) noexcept;
  ClientSession& operator=(ClientSession&& other) noexcept;
  ClientSession(const ClientSession&) = delete;
  ClientSession& operator=(const ClientSession&) = delete;
  ~ClientSession();

  /// Sends one statement and waits for its response. Transport failures
  /// throw DbError (kConnectionClosed, kTruncatedFrame, kProtocol, ...).
  net::WireResponse execute(std::string_view sql);
  void close();
  bool is_open() const noexcept { return fd_ >= 0; }

 private:
  explicit ClientSession(int fd) : fd_(fd) {}
  int fd_ = -1;
};

/// Aligned text table with a trailing "(n rows)" line.
std::string render_table(const net::RowsResponse& rows);
/// Human form of any response: a table, "OK n", or "ERR CODE message".
std::string render_response(const net::WireResponse& response);

struct ScriptResult {
  std::size_t executed = 0;
  std::size_t failed = 0;
  std::optional<std::size_t> stopped_at_line;  // 1-based, set when a failure stopped the run
};

/// Runs one statement per non-blank line; lines starting with -- are
/// comments. Stops at the first ERR unless keep_going.
ScriptResult run_script(ClientSession& session, std::istream& in, std::ostream& out, bool keep_going);

struct LoadScenario {
  std::int64_t capacity = 50;
  std::size_t clients = 200;
  std::uint64_t seed = 1;
  std::int64_t course_id = 1;
  bool prepare = true;  // create tables if needed and reset this course's rows
};

struct LoadReport {
  std::size_t attempts = 0;
  std::size_t successes = 0;
  std::size_t constraint_rejections = 0;
  std::size_t errors = 0;
  std::chrono::duration<double> elapsed{};
  double throughput = 0;  // statements per second
  std::int64_t final_capacity = 0;
  std::size_t enrollment_count = 0;
};

/// Serial model of the scenario: the first `capacity` attempts succeed.
LoadReport serial_oracle(const LoadScenario& scenario);

/// Runs `clients` concurrent sessions, each trying one enrollment.
LoadReport run_loadgen(const std::string& host, std::uint16_t port, const LoadScenario& scenario);

std::string format_report(const LoadReport& report);

}  // namespace autodb::client
